"""Geometry of the fine box, the coarse grid and the graph representation.

Sites of ``Lambda_N = [-N, N]^3`` are linearised row-major with an offset of
``+N`` per axis.  Everything outside the box is identified to a single ghost
vertex whose index is ``n_sites``; boundary edges attach to it.

Coarse-site sets are boolean masks of shape ``(2*Nhat + 1,) * 3`` indexed by
``v + Nhat``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

UNIT_VECTORS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
    dtype=np.int64,
)

# 6-neighbour structuring element used for nearest-neighbour connectivity
NN_STRUCTURE = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class Region:
    """The box ``Lambda_N`` of half-side ``N``."""

    N: int

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"N must be >= 0, got {self.N}")

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def n_sites(self) -> int:
        return self.side ** 3

    @property
    def origin(self) -> int:
        return self.index((0, 0, 0))

    def index(self, site) -> int:
        x, y, z = (int(c) + self.N for c in site)
        s = self.side
        return (x * s + y) * s + z

    def indices(self, coords: np.ndarray) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64) + self.N
        s = self.side
        return (c[..., 0] * s + c[..., 1]) * s + c[..., 2]

    def coords(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        s = self.side
        out = np.stack([idx // (s * s), (idx // s) % s, idx % s], axis=-1)
        return out - self.N

    def contains(self, coords) -> np.ndarray:
        c = np.asarray(coords)
        return np.all(np.abs(c) <= self.N, axis=-1)

    @cached_property
    def all_coords(self) -> np.ndarray:
        return self.coords(np.arange(self.n_sites))


def internal_edges(region: Region) -> np.ndarray:
    """Nearest-neighbour pairs with both endpoints in the box.

    Returns an ``(m, 2)`` array of site indices, ordered by axis and then by
    the lower endpoint.  ``m = 3 (2N) (2N+1)^2``.
    """
    s = region.side
    idx = np.arange(region.n_sites).reshape(s, s, s)
    parts = []
    for axis in range(3):
        lo = np.take(idx, np.arange(s - 1), axis=axis).ravel()
        hi = np.take(idx, np.arange(1, s), axis=axis).ravel()
        parts.append(np.stack([lo, hi], axis=1))
    return np.concatenate(parts).astype(np.int64)


def boundary_edges(region: Region):
    """Directed boundary edges ``(u inside, v outside)``.

    Returns ``(inside, outside)`` where ``inside`` holds site indices and
    ``outside`` the ``(m, 3)`` coordinates of the outer endpoint.
    """
    coords = region.all_coords
    inside, outside = [], []
    for d in UNIT_VECTORS:
        nb = coords + d
        mask = ~region.contains(nb)
        inside.append(np.flatnonzero(mask))
        outside.append(nb[mask])
    return np.concatenate(inside).astype(np.int64), np.concatenate(outside)


@dataclass(frozen=True, eq=False)
class Graph:
    """A finite graph with an optional ghost vertex.

    ``edges`` is an ``(m, 2)`` integer array; an endpoint equal to
    ``n_sites`` is the ghost (the identified external boundary).  Internal
    edges come first.
    """

    n_sites: int
    edges: np.ndarray
    origin: int = 0
    region: Region | None = None
    name: str = ""

    def __post_init__(self):
        e = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", e)
        if e.size and (e.min() < 0 or e.max() > self.n_sites):
            raise ValueError("edge endpoint out of range")
        if e.size and np.any(e[:, 0] == self.n_sites):
            raise ValueError("ghost must be the second endpoint")

    @property
    def ghost(self) -> int:
        return self.n_sites

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def is_boundary(self) -> np.ndarray:
        return self.edges[:, 1] == self.n_sites

    @property
    def n_boundary(self) -> int:
        return int(self.is_boundary.sum())

    @cached_property
    def boundary_degree(self) -> np.ndarray:
        """Number of boundary edges at each site."""
        b = self.edges[self.is_boundary, 0]
        return np.bincount(b, minlength=self.n_sites).astype(np.int64)

    @cached_property
    def internal(self) -> np.ndarray:
        return self.edges[~self.is_boundary]

    @cached_property
    def neighbours(self) -> list[np.ndarray]:
        """Internal neighbour lists (ghost excluded)."""
        nb = [[] for _ in range(self.n_sites)]
        for u, v in self.internal:
            nb[u].append(v)
            nb[v].append(u)
        return [np.array(x, dtype=np.int64) for x in nb]


def lattice_graph(N: int) -> Graph:
    """The graph ``E(Lambda_N) U d^e Lambda_N`` with the wired ghost."""
    region = Region(N)
    inner = internal_edges(region)
    b_in, _ = boundary_edges(region)
    ghost = np.full_like(b_in, region.n_sites)
    edges = np.concatenate([inner, np.stack([b_in, ghost], axis=1)])
    return Graph(region.n_sites, edges, origin=region.origin, region=region,
                 name=f"Lambda_{N}")


def free_lattice_graph(N: int) -> Graph:
    """``Lambda_N`` with internal edges only (free boundary)."""
    region = Region(N)
    return Graph(region.n_sites, internal_edges(region), origin=region.origin,
                 region=region, name=f"Lambda_{N}_free")


# --------------------------------------------------------------------------
# coarse grid


@dataclass(frozen=True)
class CoarseGrid:
    """Coarse grid ``Lambda_Nhat`` with boxes ``Q_v = q v + [-q, q]^3``."""

    N: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if (self.N + 1) % self.q:
            raise ValueError(f"q={self.q} must divide N+1={self.N + 1}")
        if self.Nhat < 0:
            raise ValueError("coarse grid would be empty")

    @property
    def Nhat(self) -> int:
        return (self.N + 1) // self.q - 1

    @property
    def side(self) -> int:
        return 2 * self.Nhat + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.side,) * 3

    @property
    def region(self) -> Region:
        return Region(self.N)

    @property
    def origin(self) -> tuple[int, int, int]:
        return (self.Nhat,) * 3

    def empty(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=bool)

    def mask_of(self, sites) -> np.ndarray:
        m = self.empty()
        for v in sites:
            m[tuple(np.asarray(v) + self.Nhat)] = True
        return m

    def sites_of(self, mask: np.ndarray) -> np.ndarray:
        """Coarse coordinates (not array indices) of a mask."""
        return np.argwhere(mask) - self.Nhat

    @cached_property
    def boundary_layer(self) -> np.ndarray:
        """``d_i Lambda_Nhat`` as a mask."""
        m = np.ones(self.shape, dtype=bool)
        if self.side > 2:
            m[1:-1, 1:-1, 1:-1] = False
        return m

    def box_coords(self, v) -> np.ndarray:
        """Fine coordinates of ``Q_v`` (inside ``Lambda_{N+1}``)."""
        c = self.q * np.asarray(v, dtype=np.int64)
        r = np.arange(-self.q, self.q + 1)
        g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
        return g + c

    def fine_mask(self, mask: np.ndarray) -> np.ndarray:
        """``Q_V`` for a coarse mask ``V``, as a mask over ``Lambda_{N+1}``.

        The result has shape ``(2N+3,)*3`` and is indexed by ``x + N + 1``.
        """
        s = 2 * self.N + 3
        out = np.zeros((s, s, s), dtype=bool)
        q = self.q
        for v in np.argwhere(mask):
            lo = q * v  # (v - Nhat) * q - q + (N + 1) == q * v
            out[lo[0]:lo[0] + 2 * q + 1, lo[1]:lo[1] + 2 * q + 1,
                lo[2]:lo[2] + 2 * q + 1] = True
        return out

    def fine_sites(self, mask: np.ndarray) -> np.ndarray:
        """Indices of the sites of ``Q_V`` that lie in ``Lambda_N``."""
        big = self.fine_mask(mask)[1:-1, 1:-1, 1:-1]
        return np.flatnonzero(big.ravel())


def ball(A: np.ndarray, k: int) -> np.ndarray:
    """``Ball(A; k)``: grid vertices within l-infinity distance ``k`` of ``A``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    A = np.asarray(A, dtype=bool)
    if k == 0 or not A.any():
        return A.copy()
    return ndimage.maximum_filter(A, size=2 * k + 1, mode="constant", cval=False)


def _escaping(A: np.ndarray, boundary: np.ndarray) -> np.ndarray:
    labels, _ = ndimage.label(~A, structure=NN_STRUCTURE)
    hit = np.unique(labels[boundary & ~A])
    hit = hit[hit > 0]
    return np.isin(labels, hit)


def enclosure(A: np.ndarray, boundary: np.ndarray | None = None) -> np.ndarray:
    """``psi(A)``: vertices all of whose paths to the grid boundary meet ``A``.

    Computed as the complement of the nearest-neighbour flood fill of the
    grid minus ``A`` started from the boundary layer.
    """
    A = np.asarray(A, dtype=bool)
    if boundary is None:
        boundary = _boundary_layer(A.shape)
    return ~_escaping(A, boundary)


def _boundary_layer(shape) -> np.ndarray:
    m = np.ones(shape, dtype=bool)
    if min(shape) > 2:
        m[1:-1, 1:-1, 1:-1] = False
    return m


def inner_boundary(A: np.ndarray) -> np.ndarray:
    """``d_i A`` with respect to ``Z^3``: grid edges count as outside."""
    A = np.asarray(A, dtype=bool)
    pad = np.pad(A, 1, constant_values=False)
    eroded = ndimage.binary_erosion(pad, structure=NN_STRUCTURE,
                                    border_value=0)[1:-1, 1:-1, 1:-1]
    return A & ~eroded


def outer_boundary(A: np.ndarray) -> np.ndarray:
    """``d_e A`` clipped to the grid."""
    A = np.asarray(A, dtype=bool)
    return ndimage.binary_dilation(A, structure=NN_STRUCTURE) & ~A


def nn_components(A: np.ndarray) -> tuple[np.ndarray, int]:
    """Nearest-neighbour connected components of a mask."""
    return ndimage.label(np.asarray(A, dtype=bool), structure=NN_STRUCTURE)


def k_connected_components(A, k: int) -> list[np.ndarray]:
    """Classes of the transitive closure of ``d_inf <= k``.

    ``A`` is either a boolean mask (components are returned as masks) or an
    ``(n, 3)`` array of points (components are returned as index arrays).
    Components are ordered by their smallest member.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    A = np.asarray(A)
    as_mask = A.dtype == bool
    pts = np.argwhere(A) if as_mask else A.reshape(-1, 3)
    n = len(pts)
    if n == 0:
        return []
    pairs = cKDTree(pts).query_pairs(r=k, p=np.inf, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(n, n))
    _, lab = connected_components(graph, directed=False)
    # relabel by first occurrence so ordering is deterministic
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(first)
    out = []
    for c in np.unique(lab)[order]:
        members = np.flatnonzero(lab == c)
        if as_mask:
            m = np.zeros(A.shape, dtype=bool)
            m[tuple(pts[members].T)] = True
            out.append(m)
        else:
            out.append(members)
    return out
