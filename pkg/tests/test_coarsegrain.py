import itertools

import numpy as np
import pytest

from rfimlab.coarsegrain import (BoundaryDecomposition, DecompositionError, aux_probability,
                                 box_is_good, brute_force_outmost_boundary, calibrate_cg, color,
                                 coarse_grain, coloring_from_blue, decompose, embed_bonds,
                                 estimate_goodbox_probability, extract_outmost_blue_boundary,
                                 GoodBoxEstimate, good_flags, is_good_box,
                                 origin_cluster_contained, sample_aux)
from rfimlab.fkising import SWChain
from rfimlab.lattice import CoarseGrid, ball, enclosure, inner_boundary, lattice_graph

from oracles import box_clusters_good, peeled_origin_region, z3_inner_boundary


def _box(s, value):
    return (np.full((s - 1, s, s), value), np.full((s, s - 1, s), value),
            np.full((s, s, s - 1), value))


def _two_planes(q):
    """Open bonds of the planes x = 0 and y = 0: one cluster on all six faces."""
    s = 2 * q + 1
    bx, by, bz = _box(s, False)
    bx[:, 0, :] = True
    bz[:, 0, :] = True
    by[0, :, :] = True
    bz[0, :, :] = True
    return bx, by, bz


def _shell(grid, r):
    return inner_boundary(ball(grid.mask_of([(0, 0, 0)]), r))


def _blue_mask(grid, pts):
    return grid.mask_of(pts)


# good boxes ---------------------------------------------------------------

@pytest.mark.parametrize("q", [1, 2, 4])
def test_all_open_good_all_closed_bad(q):
    s = 2 * q + 1
    assert box_is_good(*_box(s, True), q)
    assert not box_is_good(*_box(s, False), q)


def test_second_long_path_makes_box_bad():
    q = 4
    bx, by, bz = _two_planes(q)
    assert box_is_good(bx, by, bz, q)
    bx[2:2 + q - 1, 4, 4] = True  # diameter q - 1: still good
    assert box_is_good(bx, by, bz, q)
    bx[2 + q - 1, 4, 4] = True  # diameter q
    assert not box_is_good(bx, by, bz, q)


def test_spanning_cluster_must_touch_every_face():
    q = 3
    s = 2 * q + 1
    bx, by, bz = _box(s, False)
    bx[:, 0, 0] = True  # a line touches only four faces
    assert not box_is_good(bx, by, bz, q)


@pytest.mark.parametrize("density", [0.3, 0.5, 0.7])
def test_good_box_matches_bfs(density):
    rng = np.random.default_rng(int(density * 10))
    for q in (1, 2, 3):
        s = 2 * q + 1
        for _ in range(30):
            arrs = [rng.random(a.shape) < density for a in _box(s, False)]
            assert box_is_good(*arrs, q) == box_clusters_good(*arrs, q)


def test_embedding_wired_and_free_outside_bonds():
    g = lattice_graph(2)
    omega = np.zeros(g.n_edges, bool)
    wired = embed_bonds(g, omega)
    free = embed_bonds(g, omega, wired=False)
    # bond between two outside sites along the x = -3 face
    assert wired.y[0, 0, 0] and not free.y[0, 0, 0]
    # boundary edges follow omega
    assert not wired.x[0, 3, 3]
    omega[g.is_boundary] = True
    assert embed_bonds(g, omega).x[0, 3, 3]


# colouring ---------------------------------------------------------------

def test_color_examples():
    g = lattice_graph(3)
    grid = CoarseGrid(3, 2)
    bonds = embed_bonds(g, np.ones(g.n_edges, bool))
    col = color(bonds, grid, np.ones(grid.shape, bool))
    assert col.red.all()
    aux = np.ones(grid.shape, bool)
    aux[0, 1, 2] = False
    assert color(bonds, grid, aux).blue.sum() == 1


def test_color_matches_per_vertex_recomputation():
    g = lattice_graph(5)
    grid = CoarseGrid(5, 2)
    rng = np.random.default_rng(3)
    for _ in range(5):
        omega = rng.random(g.n_edges) < 0.6
        bonds = embed_bonds(g, omega)
        flags = good_flags(bonds, grid)
        for idx in np.ndindex(grid.shape):
            v = np.array(idx) - grid.Nhat
            assert flags[idx] == is_good_box(bonds, grid, v)
            lo = grid.q * np.array(idx)
            assert flags[idx] == box_clusters_good(*bonds.box(lo, 2 * grid.q + 1), grid.q)


def test_aux_probability_and_determinism():
    assert aux_probability(1.0, 250) == pytest.approx(1 - np.exp(-1))
    with pytest.raises(ValueError):
        aux_probability(0.0, 4)
    grid = CoarseGrid(15, 4)
    assert np.array_equal(sample_aux(grid, 50.0, 7).bits, sample_aux(grid, 50.0, 7).bits)


# extraction --------------------------------------------------------------

def test_all_red_has_no_boundary():
    grid = CoarseGrid(4, 1)
    B, Bp = extract_outmost_blue_boundary(coloring_from_blue(grid, grid.empty()), 1)
    assert not B.any() and not Bp.any()


def test_lone_blue_origin():
    grid = CoarseGrid(4, 1)
    B, Bp = extract_outmost_blue_boundary(coloring_from_blue(grid, grid.mask_of([(0, 0, 0)])), 2)
    assert np.array_equal(B, grid.mask_of([(0, 0, 0)])) and not Bp.any()


def test_shell_boundary():
    grid = CoarseGrid(4, 1)
    shell = _shell(grid, 2)
    B, Bp = extract_outmost_blue_boundary(coloring_from_blue(grid, shell), 1)
    assert np.array_equal(B, shell) and not Bp.any()
    assert np.array_equal(enclosure(B), ball(grid.mask_of([(0, 0, 0)]), 2))


def test_B_prime_collects_nearby_blue():
    grid = CoarseGrid(6, 1)
    blue = grid.mask_of([(0, 0, 0), (0, 0, 2), (0, 0, 4), (0, 5, 0)])
    B, Bp = extract_outmost_blue_boundary(coloring_from_blue(grid, blue), 1)
    assert np.array_equal(B, grid.mask_of([(0, 0, 0)]))
    assert np.array_equal(Bp, grid.mask_of([(0, 0, 2), (0, 0, 4)]))


def _window_colorings(grid, window):
    for bits in itertools.product((False, True), repeat=len(window)):
        blue = grid.mask_of([w for w, b in zip(window, bits) if b])
        yield coloring_from_blue(grid, blue)


def _agrees_with_brute_force(col, k):
    B, _ = extract_outmost_blue_boundary(col, k)
    best = brute_force_outmost_boundary(col)
    if not B.any():
        return not best
    return len(best) == 1 and np.array_equal(best[0], B)


def test_extraction_exhaustive_window_brute_force():
    grid = CoarseGrid(2, 1)
    window = [(0, 0, 0), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1),
              (0, 0, -1), (1, 1, 0)]
    for col in _window_colorings(grid, window):
        assert _agrees_with_brute_force(col, 1)


def test_extraction_matches_peeling_oracle_random():
    rng = np.random.default_rng(9)
    for side_half in (2, 3):
        grid = CoarseGrid(side_half, 1)
        for density in (0.2, 0.5, 0.8):
            for _ in range(15):
                blue = rng.random(grid.shape) < density
                B, _ = extract_outmost_blue_boundary(coloring_from_blue(grid, blue), 1)
                D = peeled_origin_region(blue)
                assert np.array_equal(B, z3_inner_boundary(D))


# decomposition -----------------------------------------------------------

def test_point_decomposition():
    grid = CoarseGrid(9, 1)
    o = grid.mask_of([(0, 0, 0)])
    col = coloring_from_blue(grid, o)
    B, Bp = extract_outmost_blue_boundary(col, 4)
    dec = decompose(col, B, Bp, 4)
    assert np.array_equal(dec.S1, ball(o, 4) & ~o)
    assert np.array_equal(dec.S2, ball(o, 8) & ~ball(o, 4))
    assert dec.n_holes == 0 and dec.L == 1


def test_shell_decomposition_has_one_hole():
    grid = CoarseGrid(4, 1)
    col = coloring_from_blue(grid, _shell(grid, 2))
    B, Bp = extract_outmost_blue_boundary(col, 1)
    dec = decompose(col, B, Bp, 1)
    assert dec.n_holes == 1
    assert np.array_equal(dec.holes[0], grid.mask_of([(0, 0, 0)]))
    assert np.array_equal(dec.U_star, ~ball(grid.mask_of([(0, 0, 0)]), 3))
    assert all(r["ok"] for r in dec.report)


@pytest.mark.parametrize("seed", [1, 2])
def test_random_decompositions_satisfy_invariants(seed):
    k = 4
    rng = np.random.default_rng(seed)
    for side_half in (3, 4, 6):
        grid = CoarseGrid(side_half, 1)
        for _ in range(12):
            blue = rng.random(grid.shape) < rng.uniform(0.1, 0.6)
            col = coloring_from_blue(grid, blue)
            B, Bp = extract_outmost_blue_boundary(col, k)
            if not B.any():
                continue
            dec = decompose(col, B, Bp, k)  # strict: raises on any violation
            for U in dec.holes:
                assert np.array_equal(enclosure(U), U)


def test_S2_cap_needs_k_at_least_4():
    # |S2| <= (4k+1)^3 L, which is below 80 k^3 L only from k = 4 on
    grid = CoarseGrid(4, 1)
    col = coloring_from_blue(grid, grid.mask_of([(0, 0, 0), (2, 2, 2)]))
    B, Bp = extract_outmost_blue_boundary(col, 1)
    with pytest.raises(DecompositionError) as exc:
        decompose(col, B, Bp, 1)
    assert exc.value.check == "S2_volume"
    B, Bp = extract_outmost_blue_boundary(col, 4)
    assert all(r["ok"] for r in decompose(col, B, Bp, 4).report)


def test_decomposition_reports_violation():
    grid = CoarseGrid(4, 1)
    blue = grid.mask_of([(0, 0, 0), (0, 0, 2)])
    col = coloring_from_blue(grid, blue)
    B = grid.mask_of([(0, 0, 0)])
    with pytest.raises(DecompositionError) as exc:
        decompose(col, B, grid.empty(), 1)
    assert exc.value.check == "ball_blue_equals_X"
    dec = decompose(col, B, grid.empty(), 1, strict=False)
    assert not next(r for r in dec.report if r["check"] == "ball_blue_equals_X")["ok"]


def test_decomposition_text_round_trip():
    grid = CoarseGrid(4, 1)
    col = coloring_from_blue(grid, _shell(grid, 2))
    B, Bp = extract_outmost_blue_boundary(col, 1)
    dec = decompose(col, B, Bp, 1)
    back = BoundaryDecomposition.from_text(dec.to_text())
    for name in ("B", "B_prime", "S1", "S2", "U_star", "outer_annulus"):
        assert np.array_equal(getattr(back, name), getattr(dec, name))
    assert len(back.holes) == 1 and np.array_equal(back.holes[0], dec.holes[0])
    assert back.to_text() == dec.to_text()


# pipeline ----------------------------------------------------------------

def test_origin_cluster_containment_on_samples():
    g = lattice_graph(7)
    grid = CoarseGrid(7, 2)
    rng = np.random.default_rng(1)
    chain = SWChain(g, rng.standard_normal(g.n_sites), 0.1, 3.0, "plus", rng)
    chain.run(50)
    checked = 0
    for _ in range(60):
        chain.run(1)
        w = chain.bonds
        s = coarse_grain(g, w, grid, sample_aux(grid, 30.0, rng), 1)
        ok = origin_cluster_contained(g, w, grid, s.B, s.B_prime, 1)
        if ok is not None:
            checked += 1
            assert ok
    assert checked > 0


def test_all_red_sample_has_zero_size():
    g = lattice_graph(7)
    grid = CoarseGrid(7, 2)
    s = coarse_grain(g, np.ones(g.n_edges, bool), grid, np.ones(grid.shape, bool), 1)
    assert s.L == 0 and s.decomposition is None


def test_goodbox_low_temperature():
    est = estimate_goodbox_probability(1.0, 4, "wired", 200, np.random.default_rng(0),
                                       burn_in=20, n_batches=20)
    assert est.p_good > 0.99


def test_goodbox_argument_checks():
    with pytest.raises(ValueError):
        estimate_goodbox_probability(3.0, 2, "periodic", 10)


def test_calibrate_cg():
    est = [GoodBoxEstimate(3.0, 4, "wired", 1 - np.exp(-4.0), 0.0, 1000),
           GoodBoxEstimate(3.0, 8, "wired", 1.0, 0.0, 1000)]
    cal = calibrate_cg(est)
    assert cal["per_q"][4] == pytest.approx(1.0)
    assert cal["per_q"][8] == pytest.approx(-np.log(3e-3) / 8)
