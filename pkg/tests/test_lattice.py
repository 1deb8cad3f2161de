import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfimlab.lattice import (CoarseGrid, Region, ball, boundary_edges, enclosure,
                             inner_boundary, internal_edges, k_connected_components,
                             lattice_graph)

from oracles import (brute_boundary_edges, brute_internal_edges, brute_k_components,
                     definitional_enclosure)


@pytest.mark.parametrize("N, expected", [(0, 0), (1, 54), (2, 300)])
def test_internal_edge_counts(N, expected):
    region = Region(N)
    e = internal_edges(region)
    assert len(e) == expected == 3 * (2 * N) * (2 * N + 1) ** 2
    coords = region.coords(e)
    assert np.all(np.abs(coords[:, 0] - coords[:, 1]).sum(axis=1) == 1)


@pytest.mark.parametrize("N", [0, 1, 2])
def test_edges_match_enumeration(N):
    region = Region(N)
    got = {frozenset(map(tuple, region.coords(p))) for p in internal_edges(region)}
    assert got == brute_internal_edges(N)
    inside, outside = boundary_edges(region)
    got_b = {(tuple(region.coords(i)), tuple(o)) for i, o in zip(inside, outside)}
    assert got_b == brute_boundary_edges(N)


@pytest.mark.parametrize("N, expected", [(0, 6), (1, 54)])
def test_boundary_edge_counts(N, expected):
    inside, _ = boundary_edges(Region(N))
    assert len(inside) == expected


def test_handshake_identity_up_to_16():
    for N in range(17):
        region = Region(N)
        n_int = len(internal_edges(region))
        n_bnd = 6 * (2 * N + 1) ** 2
        assert len(boundary_edges(region)[0]) == n_bnd
        assert 2 * n_int + n_bnd == 6 * region.n_sites


def test_lattice_graph_layout():
    g = lattice_graph(1)
    assert g.n_sites == 27 and g.n_edges == 108
    assert g.region.coords(g.origin).tolist() == [0, 0, 0]
    assert g.boundary_degree[g.origin] == 0
    assert g.boundary_degree.sum() == 54


def test_region_index_roundtrip():
    region = Region(3)
    idx = np.arange(region.n_sites)
    assert np.array_equal(region.indices(region.coords(idx)), idx)


# --- coarse grid -----------------------------------------------------------


def test_coarse_grid_requires_divisibility():
    with pytest.raises(ValueError):
        CoarseGrid(6, 4)
    assert CoarseGrid(15, 4).Nhat == 3


@pytest.mark.parametrize("q", [1, 2, 4])
@pytest.mark.parametrize("n_plus_1", [4, 8])
def test_boxes_cover_enlarged_region(q, n_plus_1):
    grid = CoarseGrid(n_plus_1 - 1, q)
    covered = set()
    for v in grid.sites_of(np.ones(grid.shape, bool)):
        covered |= set(map(tuple, grid.box_coords(v)))
    r = range(-n_plus_1, n_plus_1 + 1)
    assert covered == {(a, b, c) for a in r for b in r for c in r}
    assert grid.fine_mask(np.ones(grid.shape, bool)).all()


def test_box_overlap_iff_close():
    grid = CoarseGrid(11, 2)
    sites = grid.sites_of(np.ones(grid.shape, bool))
    rng = np.random.default_rng(0)
    for _ in range(200):
        u, v = sites[rng.integers(len(sites), size=2)]
        qu = set(map(tuple, grid.box_coords(u)))
        qv = set(map(tuple, grid.box_coords(v)))
        assert len(qu) == (2 * grid.q + 1) ** 3
        assert (not (qu & qv)) == (np.abs(u - v).max() > 2)


# --- balls, enclosure, k-connectivity ---------------------------------------


def test_ball_of_origin():
    A = np.zeros((9, 9, 9), bool)
    A[4, 4, 4] = True
    assert ball(A, 1).sum() == 27
    assert np.array_equal(ball(A, 0), A)
    assert not ball(np.zeros_like(A), 3).any()


def test_ball_clipped_at_corner():
    A = np.zeros((5, 5, 5), bool)
    A[0, 0, 1] = True
    A[4, 3, 4] = True
    got = ball(A, 2)
    pts = np.argwhere(A)
    want = np.zeros_like(A)
    for v in np.ndindex(A.shape):
        want[v] = min(np.abs(np.array(v) - p).max() for p in pts) <= 2
    assert np.array_equal(got, want)


def test_enclosure_examples():
    grid = CoarseGrid(7 * 1 - 1 + 2, 1)  # Nhat = 7
    empty = grid.empty()
    assert not enclosure(empty).any()
    B2 = ball(grid.mask_of([(0, 0, 0)]), 2)
    shell = inner_boundary(B2)
    assert np.array_equal(enclosure(shell), B2)
    single = grid.mask_of([(1, 0, 0)])
    assert np.array_equal(enclosure(single), single)


@pytest.mark.parametrize("side", [1, 3, 5, 7, 9])
def test_enclosure_matches_definition(side):
    rng = np.random.default_rng(side)
    for density in (0.1, 0.3, 0.5, 0.7):
        A = rng.random((side,) * 3) < density
        assert np.array_equal(enclosure(A), definitional_enclosure(A))


def test_enclosure_contains_set():
    rng = np.random.default_rng(5)
    A = rng.random((9, 9, 9)) < 0.4
    assert np.all(enclosure(A)[A])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 0.6), st.floats(0.0, 0.5))
def test_enclosure_monotone(seed, d1, d2):
    rng = np.random.default_rng(seed)
    A = rng.random((17, 17, 17)) < d1
    B = A | (rng.random(A.shape) < d2)
    assert not np.any(enclosure(A) & ~enclosure(B))


def test_k_connectivity_edge_cases():
    pts = np.array([[0, 0, 0], [2, 1, 0]])
    assert len(k_connected_components(pts, 2)) == 1
    assert len(k_connected_components(pts, 1)) == 2


@pytest.mark.parametrize("seed", range(5))
def test_k_components_match_transitive_closure(seed):
    rng = np.random.default_rng(seed)
    pts = rng.integers(-6, 7, size=(50, 3))
    pts = np.unique(pts, axis=0)
    got = [set(c.tolist()) for c in k_connected_components(pts, 2)]
    assert got == brute_k_components(pts, 2)


def test_k_components_on_masks_partition():
    rng = np.random.default_rng(3)
    A = rng.random((9, 9, 9)) < 0.05
    comps = k_connected_components(A, 2)
    total = np.zeros_like(A)
    for c in comps:
        assert not np.any(total & c)
        total |= c
    assert np.array_equal(total, A)
