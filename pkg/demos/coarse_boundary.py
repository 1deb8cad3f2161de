"""
From bonds to an outmost blue boundary
======================================

A bond configuration from the plus FK measure is cut into boxes of half
side q.  A box is good when one cluster crosses it in every direction and
swallows every other long path.  Bad boxes, and boxes whose auxiliary coin
came up 0, are blue.  The outmost blue boundary B around the origin and the
blue vertices near it (B') are what the Peierls argument has to pay for.
"""
import numpy as np

from rfimlab.coarsegrain import coarse_grain, decompose, sample_aux
from rfimlab.fkising import SWChain
from rfimlab.lattice import CoarseGrid, lattice_graph

N, q, k = 15, 4, 1
g = lattice_graph(N)
grid = CoarseGrid(N, q)
rng = np.random.default_rng(3)
h = rng.standard_normal(g.n_sites)

for T in (3.0, 4.0, 5.0):
    chain = SWChain(g, h, 0.1, T, "plus", rng)
    chain.run(100)
    sizes = []
    for _ in range(40):
        chain.run(2)
        s = coarse_grain(g, chain.bonds, grid, sample_aux(grid, 25.0, rng), k,
                         decompose_boundary=False)
        sizes.append(s.L)
    good = s.coloring.good.mean()
    print(f"T={T}: good boxes {good:.2f} (last sample), mean |B u B'| {np.mean(sizes):.1f}, "
          f"P(L=0) {np.mean(np.array(sizes) == 0):.2f}")

# the last sample in detail
if s.B.any():
    dec = decompose(s.coloring, s.B, s.B_prime, k, strict=False)
    print(f"|B|={int(s.B.sum())} |B'|={int(s.B_prime.sum())} holes={dec.n_holes}")
    for r in dec.report:
        print(f"  {r['check']:28s} {'ok' if r['ok'] else 'FAILED'}  {r['detail']}")
