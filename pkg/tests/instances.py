"""Sampled configurations around a forced blue shell, shared by tests."""
import numpy as np

from rfimlab.coarsegrain import (DecompositionError, color, decompose, embed_bonds,
                                 extract_outmost_blue_boundary)
from rfimlab.fkising import SWChain
from rfimlab.lattice import CoarseGrid, ball, inner_boundary, lattice_graph
from rfimlab.peierls import FineLayout, ReferenceClusterError, detect_reference_clusters

N, Q, K = 9, 2, 1


def shell_setup():
    graph = lattice_graph(N)
    grid = CoarseGrid(N, Q)
    shell = inner_boundary(ball(grid.mask_of([(0, 0, 0)]), 2))
    return graph, grid, shell, FineLayout.of(graph)


def shell_instances(count, seed=0, T=1.7, eps=0.5, thin=2):
    """Yield ``(graph, omega, decomposition, h, refs)`` for valid samples.

    The auxiliary bits are zero exactly on the shell, so the shell is blue
    whatever the bonds; samples whose decomposition or reference clusters
    fail are skipped.
    """
    graph, grid, shell, layout = shell_setup()
    rng = np.random.default_rng(seed)
    h = rng.standard_normal(graph.n_sites)
    chain = SWChain(graph, h, eps, T, "plus", rng)
    chain.run(20)
    made = tries = 0
    while made < count and tries < 20 * count:
        tries += 1
        chain.run(thin)
        omega = chain.bonds
        col = color(embed_bonds(graph, omega), grid, ~shell)
        B, Bp = extract_outmost_blue_boundary(col, K)
        if not B.any():
            continue
        try:
            dec = decompose(col, B, Bp, K)
            refs = detect_reference_clusters(graph, omega, dec, h, layout)
        except (DecompositionError, ReferenceClusterError):
            continue
        made += 1
        yield graph, omega, dec, h, refs
