"""
Padded random partitions
========================

The random partition cuts a metric space into blocks of diameter at most R.
A point is padded when its r-ball stays inside its own block; the chance of
not being padded is bounded by (8r/R) H(|B(x,R/8)|, |B(x,R)|).
"""
import numpy as np

from rfimlab.metricpartition import FiniteMetricSpace, padding_rate, partition_boundary_set

rng = np.random.default_rng(0)
X = FiniteMetricSpace(rng.integers(0, 30, (400, 3)), "chebyshev")
for r in (1.0, 2.0, 2.9):
    est = padding_rate(X, 24.0, r, 0, 4000, rng)
    print(f"r={r}: cut rate {est.rate:.4f} +- {est.stderr:.4f}, bound {est.bound:.4f}")

# on a long boundary-like set the unpadded fraction falls as R = q^4 grows
line = np.zeros((20_000, 3), dtype=int)
line[:, 0] = np.arange(20_000)
for q in (4, 6, 8):
    rep = partition_boundary_set(line, q, rng)
    print(f"q={q}: R={rep.R:.0f}, unpadded fraction {rep.boundary_fraction:.4f}, "
          f"ln R / R {rep.reference:.4f}, c1 {rep.c1:.2f}")
