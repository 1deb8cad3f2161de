"""Small graphs on which every exact identity is checked by enumeration."""
from __future__ import annotations

import itertools

import numpy as np

from .lattice import Graph, lattice_graph


def _box(nx, ny, nz):
    coords = list(itertools.product(range(nx), range(ny), range(nz)))
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for c in coords:
        for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            nb = tuple(a + b for a, b in zip(c, d))
            if nb in index:
                edges.append((index[c], index[nb]))
    return len(coords), edges


def single_site() -> Graph:
    return lattice_graph(0)


def box_graph(nx, ny, nz, wired_sites=(), name="") -> Graph:
    """An ``nx*ny*nz`` sub-box; each site listed in ``wired_sites`` gets one
    boundary edge (repeat a site for several)."""
    n, edges = _box(nx, ny, nz)
    edges = edges + [(s, n) for s in wired_sites]
    return Graph(n, np.array(edges), origin=0, name=name or f"box{nx}{ny}{nz}")


def random_sparse_graph(seed: int, max_sites: int = 8, max_total: int = 20) -> Graph:
    """Connected random graph plus a few boundary edges, ``n + m <= max_total``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, max_sites + 1))
    # random spanning tree
    edges = {(int(rng.integers(i)), i) for i in range(1, n)}
    budget = max_total - n - len(edges)
    n_bnd = int(rng.integers(1, 4))
    extra = max(0, budget - n_bnd)
    candidates = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in edges]
    rng.shuffle(candidates)
    edges |= set(candidates[: int(rng.integers(0, extra + 1))])
    edges = sorted(edges) + [(int(s), n) for s in rng.integers(n, size=n_bnd)]
    return Graph(n, np.array(edges), origin=0, name=f"random{seed}")


def es_fixtures() -> list[Graph]:
    """Graphs with at most 10 sites and ``|sites| + |edges| <= 22``."""
    graphs = [
        single_site(),
        box_graph(2, 2, 2, name="cube_free"),
        box_graph(2, 2, 2, wired_sites=(7, 7), name="cube_corner_wired"),
        box_graph(2, 2, 1, wired_sites=(0, 1, 2, 3), name="square_wired"),
        box_graph(6, 1, 1, wired_sites=(0, 5), name="path_wired"),
        six_site(),
    ]
    graphs += [random_sparse_graph(s) for s in range(5)]
    return graphs


def six_site() -> Graph:
    return box_graph(1, 2, 3, wired_sites=(5, 4, 1), name="six_site")


def cube_fixture() -> Graph:
    """2x2x2 sub-box with the origin corner away from two wired sites."""
    return box_graph(2, 2, 2, wired_sites=(7, 7), name="cube_corner_wired")


def box_223() -> Graph:
    return box_graph(2, 2, 3, wired_sites=(11, 11, 10), name="box223")


def fixture_field(graph: Graph, seed: int) -> np.ndarray:
    return np.random.default_rng(10_000 + seed).standard_normal(graph.n_sites)
