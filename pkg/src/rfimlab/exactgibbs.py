"""Ising side of the model: Hamiltonian, exact enumeration oracles and a
heat-bath sampler.

Spin states of an ``n``-site graph are encoded as integers; bit ``i`` set
means ``sigma_i = +1``.  All statistical mechanics is done in the log domain.
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.special import expit, logsumexp

from .lattice import Graph

ENUMERATION_CAP = 24
CHUNK_BITS = 16


class EnumerationCapError(ValueError):
    """Raised when an exhaustive enumeration would exceed its size cap."""


def bc_sign(bc) -> int:
    if bc in ("plus", "+", 1):
        return 1
    if bc in ("minus", "-", -1):
        return -1
    raise ValueError(f"boundary condition must be 'plus' or 'minus', got {bc!r}")


def check_temperature(T: float) -> float:
    T = float(T)
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    return T


def scaled_field(graph: Graph, h, eps: float) -> np.ndarray:
    """``eps * h`` as a float array over the sites (``h=None`` means zero)."""
    if eps < 0:
        raise ValueError("field scale eps must be >= 0")
    if h is None:
        return np.zeros(graph.n_sites)
    values = np.asarray(getattr(h, "values", h), dtype=np.float64)
    if values.shape != (graph.n_sites,):
        raise ValueError("field does not match graph")
    return eps * values


def hamiltonian(graph: Graph, sigma, bc, h=None, eps: float = 0.0) -> float:
    sigma = np.asarray(sigma, dtype=np.int64)
    s = bc_sign(bc)
    inner = graph.internal
    pair = np.sum(sigma[inner[:, 0]] * sigma[inner[:, 1]])
    bnd = s * np.sum(graph.boundary_degree * sigma)
    fld = np.dot(scaled_field(graph, h, eps), sigma)
    return -float(pair + bnd + fld)


def states_to_spins(states: np.ndarray, n: int) -> np.ndarray:
    bits = (np.asarray(states, dtype=np.int64)[:, None] >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def _check_cap(graph: Graph):
    if graph.n_sites > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"{graph.n_sites} sites exceeds the enumeration cap of "
            f"{ENUMERATION_CAP} (2^{ENUMERATION_CAP} states)")


def _log_weight_chunks(graph: Graph, bc, h, eps, T):
    """Yield ``(states, spins, log weights)`` over all spin states."""
    _check_cap(graph)
    T = check_temperature(T)
    n = graph.n_sites
    s = bc_sign(bc)
    inner = graph.internal
    lin = s * graph.boundary_degree + scaled_field(graph, h, eps)
    total = 1 << n
    step = 1 << CHUNK_BITS
    for start in range(0, total, step):
        states = np.arange(start, min(start + step, total), dtype=np.int64)
        spins = states_to_spins(states, n).astype(np.float64)
        neg_h = (spins[:, inner[:, 0]] * spins[:, inner[:, 1]]).sum(axis=1)
        neg_h += spins @ lin
        yield states, spins, neg_h / T


def partition_function(graph: Graph, bc, h=None, eps=0.0, T=1.0) -> float:
    """``log Z`` by streaming log-sum-exp over all ``2^n`` states."""
    acc = -np.inf
    for _, _, lw in _log_weight_chunks(graph, bc, h, eps, T):
        acc = np.logaddexp(acc, logsumexp(lw))
    return float(acc)


def spin_distribution(graph: Graph, bc, h=None, eps=0.0, T=1.0) -> np.ndarray:
    """Normalised Gibbs probabilities indexed by state integer."""
    lw = np.concatenate([c[2] for c in _log_weight_chunks(graph, bc, h, eps, T)])
    return np.exp(lw - logsumexp(lw))


def exact_spin_marginal(graph: Graph, bc, h=None, eps=0.0, T=1.0,
                        site: int | None = None) -> float:
    """``mu^bc(sigma_site = +1)`` by enumeration (default site: origin)."""
    site = graph.origin if site is None else int(site)
    log_plus = log_all = -np.inf
    for states, _, lw in _log_weight_chunks(graph, bc, h, eps, T):
        log_all = np.logaddexp(log_all, logsumexp(lw))
        up = ((states >> site) & 1).astype(bool)
        if up.any():
            log_plus = np.logaddexp(log_plus, logsumexp(lw[up]))
    return float(np.exp(log_plus - log_all))


def exact_boundary_influence(graph: Graph, h=None, eps=0.0, T=1.0) -> float:
    """``m = mu^+(sigma_o = 1) - mu^-(sigma_o = 1)``."""
    return (exact_spin_marginal(graph, "plus", h, eps, T)
            - exact_spin_marginal(graph, "minus", h, eps, T))


# --------------------------------------------------------------------------
# heat bath


def _local_field(graph: Graph, sigma, v, bc, field):
    return (np.sum(sigma[graph.neighbours[v]]) + bc_sign(bc) * graph.boundary_degree[v]
            + field[v])


def heat_bath_prob(graph: Graph, sigma, v, bc, h=None, eps=0.0, T=1.0) -> float:
    """Probability that site ``v`` is set to ``+1`` by a heat-bath update."""
    T = check_temperature(T)
    loc = _local_field(graph, np.asarray(sigma), v, bc, scaled_field(graph, h, eps))
    return float(expit(2.0 * loc / T))


def glauber_step(graph: Graph, sigma, bc, h=None, eps=0.0, T=1.0,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """One heat-bath update of a uniformly chosen site; returns a new array."""
    rng = np.random.default_rng() if rng is None else rng
    out = np.array(sigma, dtype=np.int8, copy=True)
    v = int(rng.integers(graph.n_sites))
    p_plus = heat_bath_prob(graph, out, v, bc, h, eps, T)
    out[v] = 1 if rng.random() < p_plus else -1
    return out


@njit(cache=True)
def _heat_bath_run(sigma, indptr, indices, lin, beta, sites, u, origin, out):
    for t in range(sites.shape[0]):
        v = sites[t]
        loc = lin[v]
        for j in range(indptr[v], indptr[v + 1]):
            loc += sigma[indices[j]]
        sigma[v] = 1 if u[t] * (1.0 + np.exp(-2.0 * beta * loc)) < 1.0 else -1
        out[t] = sigma[origin]


def glauber_run(graph: Graph, sigma, bc, h=None, eps=0.0, T=1.0, n_steps=1,
                rng: np.random.Generator | None = None, chunk: int = 1 << 20):
    """Many heat-bath steps; returns ``(final sigma, origin spin per step)``."""
    rng = np.random.default_rng() if rng is None else rng
    T = check_temperature(T)
    sigma = np.array(sigma, dtype=np.int8, copy=True)
    lin = bc_sign(bc) * graph.boundary_degree + scaled_field(graph, h, eps)
    indptr = np.zeros(graph.n_sites + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(a) for a in graph.neighbours])
    indices = (np.concatenate(graph.neighbours) if graph.n_sites
               else np.zeros(0, np.int64)).astype(np.int64)
    trace = np.empty(n_steps, dtype=np.int8)
    done = 0
    while done < n_steps:
        k = min(chunk, n_steps - done)
        sites = rng.integers(graph.n_sites, size=k)
        u = rng.random(k)
        _heat_bath_run(sigma, indptr, indices, lin.astype(np.float64), 1.0 / T,
                       sites, u, graph.origin, trace[done:done + k])
        done += k
    return sigma, trace
