"""
The field-flipping map
======================

A blue shell is forced around the origin by zeroing the auxiliary bits on
it.  The interior is a hole; inside it one reference cluster is read off
the bonds, and the disorder on the whole hole is negated when that
cluster's field sum is negative.  The FK weight ratio w_{tau h}/w_0 is then
a cluster sum that can be checked against direct weights.
"""
import numpy as np

from rfimlab.coarsegrain import color, decompose, embed_bonds, extract_outmost_blue_boundary
from rfimlab.fkising import SWChain, fk_weight_with_field
from rfimlab.lattice import CoarseGrid, ball, inner_boundary, lattice_graph
from rfimlab.peierls import ratio_coarse, ratio_fine, shell_field_mass, tau

T, eps = 1.7, 0.5
g = lattice_graph(9)
grid = CoarseGrid(9, 2)
shell = inner_boundary(ball(grid.mask_of([(0, 0, 0)]), 2))
rng = np.random.default_rng(11)
h = rng.standard_normal(g.n_sites)
chain = SWChain(g, h, eps, T, "plus", rng)
chain.run(30)

shown = 0
while shown < 5:
    chain.run(3)
    w = chain.bonds
    col = color(embed_bonds(g, w), grid, ~shell)
    B, Bp = extract_outmost_blue_boundary(col, 1)
    if not B.any():
        continue
    dec = decompose(col, B, Bp, 1, strict=False)
    if not dec.n_holes:
        continue
    flipped, refs = tau(g, w, dec, h)
    direct = fk_weight_with_field(g, w, flipped.values, eps, T) - fk_weight_with_field(g, w, None, 0, T)
    print(f"xi={refs.signs} negated={flipped.negated} "
          f"ratio fine {ratio_fine(g, w, flipped.values, eps, T):9.4f} (direct {direct:9.4f}) "
          f"coarse {ratio_coarse(g, w, flipped.values, eps, T, dec):9.4f} "
          f"H={shell_field_mass(h, dec):.1f}")
    shown += 1
