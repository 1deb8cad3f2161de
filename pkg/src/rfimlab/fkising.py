"""FK-Ising (random-cluster) side of the model with an external field.

Bond configurations are boolean arrays over ``graph.edges``.  The ghost
vertex carries the boundary spin; its cluster gets weight ``exp(s x_C)``
instead of ``2 cosh(x_C)`` where ``x_C = eps h_C / T``.

Minus boundary conditions are handled by the spin-flip reduction: a minus
chain with field ``h`` is a plus chain with field ``-h`` read through
``sigma -> -sigma``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import _kernels
from .exactgibbs import bc_sign, check_temperature, scaled_field, states_to_spins
from .lattice import Graph

JOINT_CAP = 26


def temperature_to_p(T: float) -> float:
    """Edge probability ``p = 1 - exp(-2/T)``."""
    T = check_temperature(T)
    return float(-np.expm1(-2.0 / T))


def log2cosh(x):
    """``log(2 cosh x)`` without overflow."""
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a))


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    """Clusters of a bond configuration.

    ``labels`` covers the sites and, last, the ghost.  ``field_sums[c]`` is
    the sum of the scaled field ``eps * h`` over cluster ``c`` (the ghost
    itself carries no field).
    """

    labels: np.ndarray
    n_clusters: int
    ghost_label: int
    origin_label: int
    field_sums: np.ndarray

    @property
    def origin_connected(self) -> bool:
        """``s = 1`` iff the origin cluster is the ghost cluster."""
        return self.origin_label == self.ghost_label

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels[:-1] == c)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels[:-1], minlength=self.n_clusters)


def _as_bonds(graph: Graph, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=bool)
    if omega.shape != (graph.n_edges,):
        raise ValueError("bond configuration does not match graph")
    return omega


def find_clusters(graph: Graph, omega, h=None, eps: float = 1.0) -> ClusterLabeling:
    omega = _as_bonds(graph, omega)
    labels, count = _kernels.uf_labels(graph.n_sites + 1, graph.edges[:, 0],
                                       graph.edges[:, 1], omega)
    x = scaled_field(graph, h, eps)
    sums = np.bincount(labels[:-1], weights=x, minlength=count)
    return ClusterLabeling(labels, int(count), int(labels[-1]),
                           int(labels[graph.origin]), sums)


def fk_weight_with_field(graph: Graph, omega, h=None, eps=0.0, T=1.0,
                         bc="plus") -> float:
    """Unnormalised log FK weight of ``omega`` with external field.

    ``sum_e log p^w (1-p)^(1-w) + sum_{C != C*} log 2cosh(x_C) + s x_{C*}``.
    """
    T = check_temperature(T)
    omega = _as_bonds(graph, omega)
    p = temperature_to_p(T)
    cl = find_clusters(graph, omega, h, eps)
    k = int(omega.sum())
    out = k * np.log(p) + (graph.n_edges - k) * np.log1p(-p)
    x = cl.field_sums / T
    free = np.ones(cl.n_clusters, dtype=bool)
    free[cl.ghost_label] = False
    out += log2cosh(x[free]).sum() + bc_sign(bc) * x[cl.ghost_label]
    return float(out)


def _agree(graph: Graph, sigma, bc) -> np.ndarray:
    ext = np.append(np.asarray(sigma, dtype=np.int64), bc_sign(bc))
    return ext[graph.edges[:, 0]] == ext[graph.edges[:, 1]]


def sample_bonds_given_spins(graph: Graph, sigma, p: float, rng=None,
                             bc="plus") -> np.ndarray:
    """Close disagreeing edges; open agreeing ones independently w.p. ``p``.

    Boundary edges agree when the site spin equals the boundary spin.
    """
    rng = np.random.default_rng() if rng is None else rng
    return _agree(graph, sigma, bc) & (rng.random(graph.n_edges) < p)


def spin_plus_probabilities(graph: Graph, omega, h=None, eps=0.0, T=1.0,
                            bc="plus"):
    """Per-cluster probability of the plus spin given the bonds."""
    T = check_temperature(T)
    cl = find_clusters(graph, omega, h, eps)
    prob = expit(2.0 * cl.field_sums / T)
    prob[cl.ghost_label] = 1.0 if bc_sign(bc) > 0 else 0.0
    return cl, prob


def sample_spins_given_bonds(graph: Graph, omega, h=None, eps=0.0, T=1.0,
                             bc="plus", rng=None) -> np.ndarray:
    """Constant spin per cluster: the ghost cluster takes the boundary spin,
    any other cluster is plus w.p. ``exp(x_C) / (2 cosh x_C)``."""
    rng = np.random.default_rng() if rng is None else rng
    cl, prob = spin_plus_probabilities(graph, omega, h, eps, T, bc)
    cluster_spin = np.where(rng.random(cl.n_clusters) < prob, 1, -1)
    cluster_spin[cl.ghost_label] = bc_sign(bc)
    return cluster_spin[cl.labels[:-1]].astype(np.int8)


def rao_blackwell_minus_prob(graph: Graph, omega, h=None, eps=0.0, T=1.0) -> float:
    """``P(sigma_o = -1 | omega)`` under the plus measure."""
    T = check_temperature(T)
    cl = find_clusters(graph, omega, h, eps)
    if cl.origin_connected:
        return 0.0
    return float(expit(-2.0 * cl.field_sums[cl.origin_label] / T))


# --------------------------------------------------------------------------
# Swendsen-Wang


def _draw_chunk(rng, k, m, n):
    return rng.random((k, m)), rng.random((k, n + 1))


class SWChain:
    """A Swendsen-Wang chain for the Ising measure with field ``eps h``.

    ``bc='minus'`` runs the plus chain with the negated field and reports
    flipped spins.  Graphs without boundary edges give the free measure.
    """

    def __init__(self, graph: Graph, h=None, eps=0.0, T=1.0, bc="plus",
                 rng=None, sigma=None):
        self.graph = graph
        self.T = check_temperature(T)
        self.sign = bc_sign(bc)
        self.rng = np.random.default_rng() if rng is None else rng
        self.p = temperature_to_p(T)
        self._x = self.sign * scaled_field(graph, h, eps) / self.T
        self._spins = np.ones(graph.n_sites + 1, dtype=np.int8)
        if sigma is not None:
            self._spins[:-1] = self.sign * np.asarray(sigma, dtype=np.int8)
        self._eu = np.ascontiguousarray(graph.edges[:, 0])
        self._ev = np.ascontiguousarray(graph.edges[:, 1])
        self._bonds = np.zeros(graph.n_edges, dtype=np.bool_)
        self.sweeps = 0

    @property
    def sigma(self) -> np.ndarray:
        return (self.sign * self._spins[:-1]).astype(np.int8)

    @property
    def bonds(self) -> np.ndarray:
        """Bond configuration drawn in the last sweep (plus frame)."""
        return self._bonds.copy()

    def run(self, n_sweeps: int, max_draws: int = 1 << 22):
        """Advance ``n_sweeps``; return per-sweep origin spin and
        ``P(sigma_o = -1 | omega)``, both in the chain's own frame."""
        g = self.graph
        m, n = g.n_edges, g.n_sites
        sig = np.empty(n_sweeps, dtype=np.int8)
        rb = np.empty(n_sweeps)
        per = max(1, max_draws // (m + n + 1))
        done = 0
        while done < n_sweeps:
            k = min(per, n_sweeps - done)
            ub, us = _draw_chunk(self.rng, k, m, n)
            _kernels.sw_sweeps(self._spins, self._eu, self._ev, n, self.p,
                               self._x, g.origin, ub, us, sig[done:done + k],
                               rb[done:done + k], self._bonds)
            done += k
        self.sweeps += n_sweeps
        if self.sign < 0:
            sig = -sig
            rb = 1.0 - rb
        return sig, rb


def sw_step(graph: Graph, sigma, h=None, eps=0.0, T=1.0, bc="plus",
            rng=None) -> np.ndarray:
    """One Swendsen-Wang sweep: bonds given spins, then spins given bonds."""
    chain = SWChain(graph, h, eps, T, bc, rng, sigma)
    chain.run(1)
    return chain.sigma


# --------------------------------------------------------------------------
# exact enumeration


def _check_joint(graph: Graph):
    size = graph.n_sites + graph.n_edges
    if size > JOINT_CAP:
        raise ValueError(f"|sites| + |edges| = {size} exceeds the joint "
                         f"enumeration cap of {JOINT_CAP}")


def bond_states(m: int) -> np.ndarray:
    w = np.arange(1 << m, dtype=np.int64)
    return ((w[:, None] >> np.arange(m)) & 1).astype(bool)


def _agree_matrix(graph: Graph, bc) -> np.ndarray:
    spins = states_to_spins(np.arange(1 << graph.n_sites), graph.n_sites)
    ext = np.concatenate([spins, np.full((len(spins), 1), bc_sign(bc), np.int8)], 1)
    return ext[:, graph.edges[:, 0]] == ext[:, graph.edges[:, 1]]


@dataclass(frozen=True, eq=False)
class JointES:
    """Normalised Edwards-Sokal table ``log pi_h(sigma, omega)``.

    Rows are spin states, columns bond states (integer encodings).
    """

    log_table: np.ndarray
    log_Z: float

    @property
    def table(self) -> np.ndarray:
        return np.exp(self.log_table)

    def spin_marginal(self) -> np.ndarray:
        return np.exp(logsumexp(self.log_table, axis=1))

    def bond_marginal(self) -> np.ndarray:
        return np.exp(logsumexp(self.log_table, axis=0))

    def bonds_given_spins(self) -> np.ndarray:
        lt = self.log_table
        return np.exp(lt - logsumexp(lt, axis=1, keepdims=True))

    def spins_given_bonds(self) -> np.ndarray:
        """Rows are bond states, columns spin states."""
        lt = self.log_table.T
        return np.exp(lt - logsumexp(lt, axis=1, keepdims=True))


def joint_es_enumeration(graph: Graph, bc="plus", h=None, eps=0.0, T=1.0) -> JointES:
    """The Edwards-Sokal measure with field, by enumerating ``(sigma, omega)``."""
    _check_joint(graph)
    T = check_temperature(T)
    p = temperature_to_p(T)
    n, m = graph.n_sites, graph.n_edges
    spins = states_to_spins(np.arange(1 << n), n).astype(np.float64)
    O = bond_states(m).astype(np.float64)
    agree = _agree_matrix(graph, bc).astype(np.float64)
    violations = (1.0 - agree) @ O.T
    n_open = O.sum(axis=1)
    log_bond = n_open * np.log(p) + (m - n_open) * np.log1p(-p)
    log_field = spins @ scaled_field(graph, h, eps) / T
    lt = log_field[:, None] + log_bond[None, :]
    lt[violations > 0] = -np.inf
    logZ = float(logsumexp(lt))
    return JointES(lt - logZ, logZ)


def enumerate_fk_weights(graph: Graph, h=None, eps=0.0, T=1.0, bc="plus"):
    """Unnormalised log FK weights of every bond state, and the Rao-Blackwell
    value ``P(sigma_o = -1 | omega)`` for each."""
    T = check_temperature(T)
    if graph.n_edges > JOINT_CAP:
        raise ValueError("too many edges to enumerate")
    p = temperature_to_p(T)
    x = scaled_field(graph, h, eps) / T
    return _kernels.enumerate_fk(graph.n_sites, graph.edges[:, 0],
                                 graph.edges[:, 1], x, np.log(p), np.log1p(-p),
                                 graph.origin, float(bc_sign(bc)))


def exact_bond_kernel(graph: Graph, T: float, bc="plus") -> np.ndarray:
    """``P(omega | sigma)`` of the bond sampler, rows spin states."""
    p = temperature_to_p(T)
    agree = _agree_matrix(graph, bc).astype(np.float64)
    O = bond_states(graph.n_edges).astype(np.float64)
    lp = agree @ (1.0 - O).T * np.log1p(-p) + O.sum(axis=1)[None, :] * np.log(p)
    lp[(1.0 - agree) @ O.T > 0] = -np.inf
    return np.exp(lp)


def exact_spin_kernel(graph: Graph, h=None, eps=0.0, T=1.0, bc="plus") -> np.ndarray:
    """``P(sigma | omega)`` of the cluster spin sampler, rows bond states."""
    T = check_temperature(T)
    n, m = graph.n_sites, graph.n_edges
    spins = states_to_spins(np.arange(1 << n), n)
    ext = np.concatenate([spins, np.full((len(spins), 1), bc_sign(bc), np.int8)], 1)
    out = np.zeros((1 << m, 1 << n))
    for w, omega in enumerate(bond_states(m)):
        cl, prob = spin_plus_probabilities(graph, omega, h, eps, T, bc)
        _, first = np.unique(cl.labels, return_index=True)
        rep = ext[:, first]  # spin of a representative node per cluster
        consistent = np.all(ext == rep[:, cl.labels], axis=1)
        pr = np.where(rep > 0, prob[None, :], 1.0 - prob[None, :]).prod(axis=1)
        out[w] = np.where(consistent, pr, 0.0)
    return out


def exact_sw_kernel(graph: Graph, h=None, eps=0.0, T=1.0, bc="plus") -> np.ndarray:
    """One-sweep transition matrix between spin states."""
    return exact_bond_kernel(graph, T, bc) @ exact_spin_kernel(graph, h, eps, T, bc)


# --------------------------------------------------------------------------
# snapshots

_SNAP = struct.Struct("<4sIddQQQ")
_MAGIC = b"RFBD"


def save_bonds(path, omega, N: int, T: float, eps: float, seed: int,
               sweeps: int) -> None:
    """Packed bitmap (one bit per edge, edge-index order, little bit order)
    after a header with ``N, T, eps, seed, sweeps, n_edges``."""
    omega = np.asarray(omega, dtype=bool)
    with open(path, "wb") as fh:
        fh.write(_SNAP.pack(_MAGIC, N, T, eps, seed, sweeps, len(omega)))
        fh.write(np.packbits(omega, bitorder="little").tobytes())


def load_bonds(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, N, T, eps, seed, sweeps, m = _SNAP.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError("not a bond snapshot")
    bits = np.unpackbits(np.frombuffer(data, np.uint8, offset=_SNAP.size),
                         bitorder="little")[:m].astype(bool)
    return bits, dict(N=N, T=T, eps=eps, seed=seed, sweeps=sweeps)
