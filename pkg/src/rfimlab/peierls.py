"""Field-flipping Peierls map and cluster-weight ratios.

Given a decomposition around ``X = B u B'``, the edge set ``E`` consists of
the bonds with both endpoints in the boxes of the holes and of ``U_*``.
Inside each hole a reference cluster ``C_j`` is read off the bonds; the
field is then negated on whole holes so that the reference sums become
nonnegative (or share the sign of the outer reference cluster when that
one is cut off from the boundary).

Ratios are log-domain and use ``cosh`` (not ``2 cosh``), so that
``ratio = log w_{tau h} - log w_0`` for the unnormalised FK weight.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .coarsegrain import BoundaryDecomposition
from .exactgibbs import check_temperature
from .fkising import enumerate_fk_weights, find_clusters
from .lattice import Graph, ball, boundary_edges


class ReferenceClusterError(RuntimeError):
    def __init__(self, region: str, n_found: int, detail: str = ""):
        super().__init__(f"{region}: expected one reference cluster, found {n_found}"
                         + (f" ({detail})" if detail else ""))
        self.region = region
        self.n_found = n_found


def sign(x: float) -> int:
    """Sign with ``sign(0) = +1``."""
    return -1 if x < 0 else 1


def _field_values(h) -> np.ndarray:
    return np.asarray(getattr(h, "values", h), dtype=np.float64)


# --------------------------------------------------------------------------
# fine geometry of a decomposition


@dataclass(frozen=True, eq=False)
class FineLayout:
    """Endpoint positions of every graph edge on ``Lambda_{N+1}``.

    ``a`` and ``b`` hold array indices (coordinate ``+ N + 1``); the ghost
    endpoint of a boundary edge is the actual outside site.
    """

    a: np.ndarray
    b: np.ndarray

    @classmethod
    def of(cls, graph: Graph) -> "FineLayout":
        if graph.region is None:
            raise ValueError("graph has no lattice region")
        N = graph.region.N
        a = graph.region.coords(graph.edges[:, 0]) + N + 1
        b = np.empty_like(a)
        inner = ~graph.is_boundary
        b[inner] = graph.region.coords(graph.edges[inner, 1]) + N + 1
        if graph.n_boundary:
            _, outside = boundary_edges(graph.region)
            b[~inner] = outside + N + 1
        return cls(a, b)

    def within(self, fine: np.ndarray) -> np.ndarray:
        """Edges with both endpoints in a ``Lambda_{N+1}`` mask."""
        return fine[tuple(self.a.T)] & fine[tuple(self.b.T)]


def site_mask(grid, coarse: np.ndarray) -> np.ndarray:
    """``Q_V`` intersected with ``Lambda_N`` as a flat site mask."""
    return grid.fine_mask(coarse)[1:-1, 1:-1, 1:-1].ravel()


def edge_set_E(graph: Graph, decomposition: BoundaryDecomposition,
               layout: FineLayout | None = None) -> np.ndarray:
    """Mask of ``E``: bonds inside ``Q`` of the holes and of ``U_*``."""
    layout = layout or FineLayout.of(graph)
    grid = decomposition.grid
    out = np.zeros(graph.n_edges, dtype=bool)
    for U in list(decomposition.holes) + [decomposition.U_star]:
        if U.any():
            out |= layout.within(grid.fine_mask(U))
    return out


# --------------------------------------------------------------------------
# reference clusters


@dataclass(frozen=True, eq=False)
class ReferenceClusters:
    clusters: list
    signs: list
    diamond: np.ndarray | None
    diamond_sign: int
    connected: bool

    @property
    def n(self) -> int:
        return len(self.clusters)


def _big_components(graph: Graph, omega_sub: np.ndarray, sites: np.ndarray, q: int):
    """Labels of ``omega_sub`` and the labels of components (restricted to
    ``sites``) with l-infinity diameter ``>= q``.

    A component holding the ghost contains the whole wired exterior and
    counts as big whenever it reaches ``sites``.
    """
    n = graph.n_sites
    lab, count = _kernels.uf_labels(n + 1, graph.edges[:, 0], graph.edges[:, 1], omega_sub)
    idx = np.flatnonzero(sites)
    if idx.size == 0:
        return lab, np.zeros(0, dtype=np.int64)
    xyz = graph.region.coords(idx)
    l = lab[idx]
    lo = np.full((count, 3), np.iinfo(np.int64).max)
    hi = np.full((count, 3), np.iinfo(np.int64).min)
    for ax in range(3):
        np.minimum.at(lo[:, ax], l, xyz[:, ax])
        np.maximum.at(hi[:, ax], l, xyz[:, ax])
    big = (hi - lo).max(axis=1) >= q
    if graph.n_boundary and np.any(l == lab[-1]):
        big[lab[-1]] = True
    return lab, np.flatnonzero(big)


def _reference(graph, omega, layout, grid, U, annulus, name):
    q = grid.q
    region_sites = site_mask(grid, U)
    in_region = layout.within(grid.fine_mask(U))
    lab_U, _ = _kernels.uf_labels(graph.n_sites + 1, graph.edges[:, 0], graph.edges[:, 1],
                                  omega & in_region)
    A = grid.fine_mask(annulus)
    a_sites = A[1:-1, 1:-1, 1:-1].ravel()
    lab_A, big = _big_components(graph, omega & layout.within(A), a_sites, q)
    # each big annulus component lies inside one cluster of omega restricted to U
    owners = {}
    for c in big:
        rep = np.flatnonzero((lab_A[:-1] == c) & a_sites)[0]
        owners.setdefault(int(lab_U[rep]), []).append(int(c))
    if len(owners) != 1:
        raise ReferenceClusterError(name, len(owners))
    (owner, comps), = owners.items()
    if len(comps) != 1:
        raise ReferenceClusterError(name, 1, f"{len(comps)} components of diameter >= q")
    members = np.flatnonzero((lab_U[:-1] == owner) & region_sites)
    return members, lab_U[-1] == owner


def detect_reference_clusters(graph: Graph, omega, decomposition: BoundaryDecomposition,
                              h, layout: FineLayout | None = None) -> ReferenceClusters:
    """Reference clusters ``C_1..C_n`` and ``C_diamond`` with their signs.

    Only bonds in ``E`` are read.  Raises :class:`ReferenceClusterError`
    naming the region when a hole has no or several candidate clusters.
    If ``U_*`` is empty there is no outer reference cluster and the
    connected rule applies.
    """
    omega = np.asarray(omega, dtype=bool)
    layout = layout or FineLayout.of(graph)
    grid = decomposition.grid
    hv = _field_values(h)
    E = edge_set_E(graph, decomposition, layout)
    omega = omega & E
    clusters, signs = [], []
    for j, (U, A) in enumerate(zip(decomposition.holes, decomposition.hole_annuli)):
        members, _ = _reference(graph, omega, layout, grid, U, A, f"hole {j}")
        clusters.append(members)
        signs.append(sign(hv[members].sum()))
    diamond, d_sign, connected = None, 1, True
    if decomposition.U_star.any() and decomposition.outer_annulus.any():
        diamond, _ = _reference(graph, omega, layout, grid, decomposition.U_star,
                                decomposition.outer_annulus, "U_star")
        d_sign = sign(hv[diamond].sum())
        cl = find_clusters(graph, omega)
        connected = bool(cl.labels[diamond[0]] == cl.ghost_label)
    return ReferenceClusters(clusters, signs, diamond, d_sign, connected)


# --------------------------------------------------------------------------
# flipping


@dataclass(frozen=True, eq=False)
class FlippedField:
    values: np.ndarray
    negated: list = field(default_factory=list)
    conflicts: int = 0


def flip_field(h, refs: ReferenceClusters, decomposition: BoundaryDecomposition) -> FlippedField:
    """Multiply ``h`` on each hole box by ``xi_j`` (connected case) or by
    ``xi_diamond * xi_j``.  A site shared by two hole boxes keeps the first
    hole's sign; such sites are counted in ``conflicts``."""
    hv = _field_values(h)
    out = hv.copy()
    grid = decomposition.grid
    done = np.zeros(hv.shape, dtype=bool)
    negated, conflicts = [], 0
    for j, U in enumerate(decomposition.holes):
        s = refs.signs[j] if refs.connected else refs.diamond_sign * refs.signs[j]
        sites = site_mask(grid, U)
        conflicts += int(np.count_nonzero(sites & done))
        fresh = sites & ~done
        out[fresh] = s * hv[fresh]
        done |= sites
        if s < 0:
            negated.append(j)
    return FlippedField(out, negated, conflicts)


def tau(graph: Graph, omega, decomposition: BoundaryDecomposition, h,
        layout: FineLayout | None = None):
    refs = detect_reference_clusters(graph, omega, decomposition, h, layout)
    return flip_field(h, refs, decomposition), refs


# --------------------------------------------------------------------------
# ratios


def _ratio(graph: Graph, omega, h, eps, T) -> float:
    T = check_temperature(T)
    cl = find_clusters(graph, omega, _field_values(h), eps)
    x = cl.field_sums / T
    free = np.ones(cl.n_clusters, dtype=bool)
    free[cl.ghost_label] = False
    a = np.abs(x[free])
    logcosh = a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)
    return float(x[cl.ghost_label] + logcosh.sum())


def ratio_fine(graph: Graph, omega, h, eps: float, T: float) -> float:
    """``eps h_{C_*}/T + sum_{C != C_*} log cosh(eps h_C / T)`` over the
    clusters of ``omega``; pass the flipped field as ``h``."""
    return _ratio(graph, omega, h, eps, T)


def ratio_coarse(graph: Graph, omega, h, eps: float, T: float,
                 decomposition: BoundaryDecomposition,
                 layout: FineLayout | None = None) -> float:
    """The same sum over clusters of ``omega`` restricted to ``E``."""
    E = edge_set_E(graph, decomposition, layout)
    return _ratio(graph, np.asarray(omega, dtype=bool) & E, h, eps, T)


def shell_field_mass(h, decomposition: BoundaryDecomposition, radius_factor: int = 4) -> float:
    """``H = sum |h_v|`` over ``Q_{Ball(B u B', 4k)}`` inside ``Lambda_N``."""
    grid = decomposition.grid
    shell = ball(decomposition.X, radius_factor * decomposition.k)
    return float(np.abs(_field_values(h))[site_mask(grid, shell)].sum())


def exact_partition_ratio(graph: Graph, h, h_prime, eps: float, T: float) -> float:
    """``log Z(eps h') - log Z(eps h)`` for the plus FK measure with field,
    by enumeration over all bond configurations."""
    if eps == 0:
        return 0.0
    a, _ = enumerate_fk_weights(graph, h_prime, eps, T)
    b, _ = enumerate_fk_weights(graph, h, eps, T)
    return float(logsumexp(a) - logsumexp(b))

