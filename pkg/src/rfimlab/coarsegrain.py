"""Coarse graining of a bond configuration.

A coarse vertex ``v`` owns the box ``Q_v = q v + [-q, q]^3``.  Boxes are
tested for goodness on bonds embedded in ``Lambda_{N+1}``; coarse vertices
are then coloured blue (bad box or auxiliary bit 0) or red, and the outmost
blue boundary ``(B, B')`` around the origin is extracted and decomposed
into shells and holes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .fkising import SWChain, find_clusters
from .lattice import (CoarseGrid, Graph, ball, boundary_edges, enclosure, free_lattice_graph,
                      inner_boundary, k_connected_components, lattice_graph,
                      nn_components, outer_boundary)
from .stats import batch_means

DEFAULT_K = 4
AUX_SCALE = 250.0


class ExtractionError(RuntimeError):
    """The extracted boundary failed a property the construction guarantees."""


class DecompositionError(RuntimeError):
    def __init__(self, check: str, detail: str, witness=None):
        super().__init__(f"{check}: {detail}")
        self.check = check
        self.detail = detail
        self.witness = witness


# --------------------------------------------------------------------------
# bonds on the enlarged box


@dataclass(frozen=True, eq=False)
class FineBonds:
    """Bond indicators over ``Lambda_{N+1}`` as three axis arrays.

    ``x[i, j, k]`` is the bond from array index ``(i, j, k)`` to
    ``(i+1, j, k)``; array index ``a`` is coordinate ``a - (N+1)``.
    """

    N: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def box(self, lo, size):
        """The three arrays restricted to a cube of ``size`` sites at ``lo``."""
        a, b, c = (int(t) for t in lo)
        s = size
        return (self.x[a:a + s - 1, b:b + s, c:c + s],
                self.y[a:a + s, b:b + s - 1, c:c + s],
                self.z[a:a + s, b:b + s, c:c + s - 1])


def embed_bonds(graph: Graph, omega, wired: bool | None = None) -> FineBonds:
    """Place ``omega`` on ``Lambda_{N+1}``.

    Edges between two sites outside ``Lambda_N`` are open under wired
    boundary conditions (they are all part of the ghost) and closed under
    free ones.  The default follows the graph: wired iff it has boundary
    edges.
    """
    if graph.region is None:
        raise ValueError("graph has no lattice region")
    N = graph.region.N
    omega = np.asarray(omega, dtype=bool)
    if omega.shape != (graph.n_edges,):
        raise ValueError("bond configuration does not match graph")
    if wired is None:
        wired = graph.n_boundary > 0
    S = 2 * N + 3
    arrs = [np.full(tuple(S - (d == a) for d in range(3)), wired, dtype=bool)
            for a in range(3)]
    # bonds touching Lambda_N are all either internal or boundary edges
    inner = ~graph.is_boundary
    c = graph.region.coords(graph.edges[inner]) + N + 1
    _place(arrs, c[:, 0], c[:, 1], omega[inner])
    inside, outside = boundary_edges(graph.region)
    bmask = graph.is_boundary
    if bmask.any():
        if bmask.sum() != len(inside):
            raise ValueError("boundary edges do not match the lattice layout")
        ci = graph.region.coords(inside) + N + 1
        _place(arrs, ci, outside + N + 1, omega[bmask])
    else:
        ci = graph.region.coords(inside) + N + 1
        _place(arrs, ci, outside + N + 1, np.zeros(len(inside), bool))
    return FineBonds(N, *arrs)


def _place(arrs, a, b, values):
    d = b - a
    axis = np.argmax(np.abs(d), axis=1)
    lo = np.minimum(a, b)
    for ax in range(3):
        sel = axis == ax
        arrs[ax][tuple(lo[sel].T)] = values[sel]


# --------------------------------------------------------------------------
# good boxes


def box_is_good(bx, by, bz, q: int) -> bool:
    """Good-box test on one ``(2q+1)^3`` box.

    Good iff some cluster touches all six faces and no other cluster has
    l-infinity diameter ``>= q``.
    """
    s = bx.shape[1]
    _, lo, hi = _kernels.box_cluster_stats(np.ascontiguousarray(bx),
                                           np.ascontiguousarray(by),
                                           np.ascontiguousarray(bz))
    diam = (hi - lo).max(axis=1)
    big = np.flatnonzero(diam >= q)
    if len(big) != 1:
        return False
    c = big[0]
    return bool(np.all(lo[c] == 0) and np.all(hi[c] == s - 1))


def is_good_box(bonds: FineBonds, grid: CoarseGrid, v) -> bool:
    """Good-box test for ``Q_v`` (coarse coordinates ``v``)."""
    lo = grid.q * (np.asarray(v) + grid.Nhat)
    return box_is_good(*bonds.box(lo, 2 * grid.q + 1), grid.q)


def good_flags(bonds: FineBonds, grid: CoarseGrid) -> np.ndarray:
    if bonds.N != grid.N:
        raise ValueError("bonds and coarse grid disagree on N")
    out = np.zeros(grid.shape, dtype=bool)
    size = 2 * grid.q + 1
    for idx in np.ndindex(grid.shape):
        out[idx] = box_is_good(*bonds.box(grid.q * np.array(idx), size), grid.q)
    return out


# --------------------------------------------------------------------------
# auxiliary bits and colours


def aux_probability(c_g: float, q: int) -> float:
    """``p_aux = 1 - exp(-c_g q / 250)``."""
    if c_g <= 0:
        raise ValueError("c_g must be positive")
    return float(-math.expm1(-c_g * q / AUX_SCALE))


@dataclass(frozen=True, eq=False)
class AuxConfig:
    bits: np.ndarray
    seed: int | None = None


def sample_aux(grid: CoarseGrid, c_g: float, seed: int | np.random.Generator) -> AuxConfig:
    rng = np.random.default_rng(seed)
    bits = rng.random(grid.shape) < aux_probability(c_g, grid.q)
    return AuxConfig(bits, seed if isinstance(seed, (int, np.integer)) else None)


@dataclass(frozen=True, eq=False)
class CoarseColoring:
    grid: CoarseGrid
    good: np.ndarray
    aux: np.ndarray

    @property
    def red(self) -> np.ndarray:
        return self.good & self.aux

    @property
    def blue(self) -> np.ndarray:
        return ~self.red


def color(bonds: FineBonds, grid: CoarseGrid, aux) -> CoarseColoring:
    bits = np.asarray(getattr(aux, "bits", aux), dtype=bool)
    if bits.shape != grid.shape:
        raise ValueError("aux bits do not match the coarse grid")
    return CoarseColoring(grid, good_flags(bonds, grid), bits)


def coloring_from_blue(grid: CoarseGrid, blue) -> CoarseColoring:
    """A colouring with prescribed blue set (bad boxes where blue)."""
    blue = np.asarray(blue, dtype=bool)
    return CoarseColoring(grid, ~blue, np.ones(grid.shape, dtype=bool))


# --------------------------------------------------------------------------
# outmost blue boundary


def _blue_mask(coloring) -> np.ndarray:
    return np.asarray(getattr(coloring, "blue", coloring), dtype=bool)


def extract_outmost_blue_boundary(coloring, k: int = DEFAULT_K):
    """Return masks ``(B, B')``.

    Red vertices joined to the grid boundary by red paths are removed; the
    component of the origin in what remains is the largest region a blue
    boundary can enclose, and ``B`` is its inner boundary.  ``B'`` collects
    the blue vertices ``2k``-connected to ``B`` through blue vertices.
    """
    blue = _blue_mask(coloring)
    shape = blue.shape
    o = tuple(s // 2 for s in shape)
    red = ~blue
    layer = np.ones(shape, dtype=bool)
    if min(shape) > 2:
        layer[1:-1, 1:-1, 1:-1] = False
    lab, _ = nn_components(red)
    hit = np.unique(lab[layer & red])
    red_star = np.isin(lab, hit[hit > 0])
    empty = np.zeros(shape, dtype=bool)
    if red_star[o]:
        return empty, empty.copy()
    lab, _ = nn_components(~red_star)
    D = lab == lab[o]
    B = inner_boundary(D)
    if np.any(B & ~blue):
        raise ExtractionError("inner boundary of the origin region is not blue")
    if not np.array_equal(enclosure(B), D):
        raise ExtractionError("enclosure of the boundary differs from the origin region")
    reach = np.zeros(shape, dtype=bool)
    for comp in k_connected_components(blue, 2 * k):
        if np.any(comp & B):
            reach |= comp
    return B, reach & ~B


def brute_force_outmost_boundary(coloring, max_blue: int = 16) -> list:
    """All maximal blue boundaries, by enumerating subsets of the blue set.

    A subset ``S`` qualifies when ``psi(S)`` is connected, contains the
    origin and has inner boundary ``S``.  Exponential; a reference only.
    """
    blue = _blue_mask(coloring)
    o = tuple(s // 2 for s in blue.shape)
    pts = np.argwhere(blue)
    if len(pts) > max_blue:
        raise ValueError(f"{len(pts)} blue vertices exceed max_blue={max_blue}")
    best, best_size = [], 0
    for bits in range(1, 1 << len(pts)):
        S = np.zeros(blue.shape, dtype=bool)
        chosen = pts[[i for i in range(len(pts)) if bits >> i & 1]]
        S[tuple(chosen.T)] = True
        D = enclosure(S)
        if not D[o] or nn_components(D)[1] != 1:
            continue
        if not np.array_equal(inner_boundary(D), S):
            continue
        size = int(D.sum())
        if size > best_size:
            best, best_size = [S], size
        elif size == best_size:
            best.append(S)
    return best


# --------------------------------------------------------------------------
# decomposition


@dataclass(eq=False)
class BoundaryDecomposition:
    grid: CoarseGrid
    k: int
    B: np.ndarray
    B_prime: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    holes: list
    U_star: np.ndarray
    hole_annuli: list
    outer_annulus: np.ndarray
    report: list = field(default_factory=list)

    @property
    def X(self) -> np.ndarray:
        return self.B | self.B_prime

    @property
    def L(self) -> int:
        return int(self.X.sum())

    @property
    def n_holes(self) -> int:
        return len(self.holes)

    def to_text(self) -> str:
        g = self.grid
        rows = [f"N {g.N}", f"q {g.q}", f"k {self.k}"]
        roles = [("B", self.B), ("B_prime", self.B_prime), ("S1", self.S1),
                 ("S2", self.S2), ("U_star", self.U_star),
                 ("outer_annulus", self.outer_annulus)]
        roles += [(f"hole {j}", U) for j, U in enumerate(self.holes)]
        roles += [(f"annulus {j}", A) for j, A in enumerate(self.hole_annuli)]
        for name, mask in roles:
            pts = ";".join(",".join(map(str, p)) for p in g.sites_of(mask))
            rows.append(f"{name}: {pts}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BoundaryDecomposition":
        lines = text.strip().splitlines()
        head = dict(line.split() for line in lines[:3])
        grid = CoarseGrid(int(head["N"]), int(head["q"]))
        sets, holes, annuli = {}, {}, {}
        for line in lines[3:]:
            name, _, body = line.partition(":")
            pts = [tuple(map(int, p.split(","))) for p in body.split(";") if p.strip()]
            mask = grid.mask_of(pts)
            if name.startswith("hole "):
                holes[int(name.split()[1])] = mask
            elif name.startswith("annulus "):
                annuli[int(name.split()[1])] = mask
            else:
                sets[name] = mask
        return cls(grid, int(head["k"]), sets["B"], sets["B_prime"], sets["S1"],
                   sets["S2"], [holes[j] for j in sorted(holes)], sets["U_star"],
                   [annuli[j] for j in sorted(annuli)], sets["outer_annulus"])


def _check(report, name, ok, detail, witness=None, strict=True):
    report.append({"check": name, "ok": bool(ok), "detail": detail})
    if strict and not ok:
        raise DecompositionError(name, detail, witness)


def decompose(coloring, B, B_prime, k: int = DEFAULT_K,
              grid: CoarseGrid | None = None, strict: bool = True) -> BoundaryDecomposition:
    """Shells ``S1``, ``S2``, holes and annuli around ``X = B u B'``.

    All structural inequalities are checked and listed in ``report``; with
    ``strict`` a failure raises :class:`DecompositionError`.
    """
    grid = getattr(coloring, "grid", grid)
    if grid is None:
        raise ValueError("a coarse grid is required")
    B = np.asarray(B, dtype=bool)
    B_prime = np.asarray(B_prime, dtype=bool)
    if not B.any():
        raise ValueError("decomposition needs a nonempty boundary B")
    X = B | B_prime
    b1, b2 = ball(X, k), ball(X, 2 * k)
    S1, S2 = b1 & ~X, b2 & ~b1
    lab, n = nn_components(~b1)
    layer = grid.boundary_layer
    holes, U_star = [], np.zeros(grid.shape, dtype=bool)
    for c in range(1, n + 1):
        comp = lab == c
        if np.any(comp & layer):
            U_star |= comp
        else:
            holes.append(comp)
    annuli = [U & ball(outer_boundary(U), k) for U in holes]
    outer = (U_star & b2) & ~enclosure(b1)

    report: list = []
    L = int(X.sum())
    parts = [B, B_prime, S1, S2]
    overlap = sum(p.astype(int) for p in parts)
    _check(report, "shells_partition", np.all(overlap[b2] == 1) and not overlap[~b2].any(),
           "Ball(X,2k) is the disjoint union of B, B', S1, S2", overlap > 1, strict)
    blue = _blue_mask(coloring)
    _check(report, "ball_blue_equals_X", np.array_equal(b2 & blue, X),
           "Ball(X,2k) n Blue == B u B'", (b2 & blue) ^ X, strict)
    s1_cap = ((2 * k + 1) ** 3 - 1) * L
    _check(report, "S1_volume", S1.sum() <= s1_cap, f"|S1|={int(S1.sum())} <= {s1_cap}",
           None, strict)
    s2_cap = 80 * k ** 3 * L
    _check(report, "S2_volume", S2.sum() <= s2_cap, f"|S2|={int(S2.sum())} <= {s2_cap}",
           None, strict)
    _check(report, "holes_count", len(holes) <= S2.sum(),
           f"n={len(holes)} <= |S2|={int(S2.sum())}", None, strict)
    for j, U in enumerate(holes):
        _check(report, f"hole_{j}_meets_S2", np.any(U & S2), "hole contains a point of S2",
               U, strict)
        _check(report, f"hole_{j}_simply_connected", np.array_equal(enclosure(U), U),
               "psi(U_j) == U_j", enclosure(U) & ~U, strict)
    for j, A in enumerate(annuli):
        _, ncomp = nn_components(A)
        # reported only; no downstream step needs a connected annulus
        report.append({"check": f"annulus_{j}_connected", "ok": ncomp <= 1,
                       "detail": f"{ncomp} component(s)", "informational": True})
    return BoundaryDecomposition(grid, k, B, B_prime, S1, S2, holes, U_star, annuli,
                                 outer, report)


# --------------------------------------------------------------------------
# whole pipeline on one configuration


@dataclass(eq=False)
class CoarseSample:
    coloring: CoarseColoring
    B: np.ndarray
    B_prime: np.ndarray
    decomposition: BoundaryDecomposition | None

    @property
    def L(self) -> int:
        return int((self.B | self.B_prime).sum())


def coarse_grain(graph: Graph, omega, grid: CoarseGrid, aux, k: int = DEFAULT_K,
                 decompose_boundary: bool = True) -> CoarseSample:
    coloring = color(embed_bonds(graph, omega), grid, aux)
    B, Bp = extract_outmost_blue_boundary(coloring, k)
    dec = decompose(coloring, B, Bp, k) if (decompose_boundary and B.any()) else None
    return CoarseSample(coloring, B, Bp, dec)


def origin_cluster_contained(graph: Graph, omega, grid: CoarseGrid, B, B_prime,
                             k: int = DEFAULT_K) -> bool | None:
    """Whether the origin's FK cluster lies in the box region it must lie in.

    ``None`` when the origin is connected to the ghost (no claim applies).
    With ``B`` empty the region is ``Q_o``; otherwise it is
    ``Q_{psi(Ball(B u B', k))}``.
    """
    cl = find_clusters(graph, omega)
    if cl.origin_connected:
        return None
    members = cl.members(cl.origin_label)
    B = np.asarray(B, dtype=bool)
    if B.any():
        region = enclosure(ball(B | np.asarray(B_prime, dtype=bool), k))
    else:
        region = grid.mask_of([(0, 0, 0)])
    allowed = np.zeros(graph.n_sites, dtype=bool)
    allowed[grid.fine_sites(region)] = True
    return bool(allowed[members].all())


# --------------------------------------------------------------------------
# good-box probability


@dataclass(frozen=True)
class GoodBoxEstimate:
    T: float
    q: int
    bc: str
    p_good: float
    stderr: float
    samples: int

    @property
    def p_bad(self) -> float:
        return 1.0 - self.p_good


def estimate_goodbox_probability(T: float, q: int, bc: str = "wired", samples: int = 1000,
                                 rng=None, burn_in: int = 200, thin: int = 1,
                                 n_batches: int = 50) -> GoodBoxEstimate:
    """Monte Carlo estimate of ``P(Q_0 good)`` on ``Lambda_{2q}``.

    ``bc`` is ``'wired'`` (plus boundary) or ``'free'``.
    """
    if bc not in ("wired", "free"):
        raise ValueError("bc must be 'wired' or 'free'")
    if samples < 1 or thin < 1 or burn_in < 0:
        raise ValueError("samples and thin must be >= 1, burn_in >= 0")
    N = 2 * q
    graph = lattice_graph(N) if bc == "wired" else free_lattice_graph(N)
    chain = SWChain(graph, T=T, rng=np.random.default_rng(rng))
    if burn_in:
        chain.run(burn_in)
    lo = (q + 1,) * 3
    size = 2 * q + 1
    hits = np.empty(samples)
    for i in range(samples):
        chain.run(thin)
        bonds = embed_bonds(graph, chain.bonds, wired=(bc == "wired"))
        hits[i] = box_is_good(*bonds.box(lo, size), q)
    mean, err = batch_means(hits, n_batches)
    return GoodBoxEstimate(float(T), int(q), bc, mean, err, samples)


def calibrate_cg(estimates) -> dict:
    """Per-``q`` values of ``-ln(P_bad)/q`` and their pooled median.

    A zero bad count is replaced by the rule-of-three upper bound ``3/n``.
    """
    per_q = {}
    for e in estimates:
        p_bad = e.p_bad if e.p_bad > 0 else 3.0 / e.samples
        per_q[e.q] = -math.log(p_bad) / e.q
    return {"per_q": per_q, "c_g": float(np.median(list(per_q.values())))}
