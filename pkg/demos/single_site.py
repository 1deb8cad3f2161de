"""
One spin against a wired boundary
=================================

The smallest box has one site and six boundary edges.  Everything about it
is available in closed form, which makes it a good first contact with the
three ways the package computes the same number: exact enumeration, the
FK side of the coupling, and a Swendsen-Wang chain.
"""
import math

import numpy as np
from scipy.special import logsumexp

from rfimlab.exactgibbs import exact_boundary_influence, exact_spin_marginal
from rfimlab.fkising import SWChain, enumerate_fk_weights
from rfimlab.lattice import lattice_graph

g = lattice_graph(0)
T, eps, h = 2.0, 0.4, np.array([-1.3])

# closed form: the local field is 6 + eps*h under plus, -6 + eps*h under minus
plus = 1 / (1 + math.exp(-2 * (6 + eps * h[0]) / T))
minus = 1 / (1 + math.exp(-2 * (-6 + eps * h[0]) / T))
print(f"closed form      m = {plus - minus:.6f}")
print(f"enumeration      m = {exact_boundary_influence(g, h, eps, T):.6f}")

# FK side: P(sigma_o = -1) is the average of the conditional probability given bonds
logw, rb = enumerate_fk_weights(g, h, eps, T)
fk_minus = np.exp(logw - logsumexp(logw)) @ rb
print(f"FK side    P(-1|+) = {fk_minus:.6f}   spin side {1 - exact_spin_marginal(g, 'plus', h, eps, T):.6f}")

# the chain, with the Rao-Blackwell estimator; minus runs as plus with -h
rng = np.random.default_rng(0)
_, rb_plus = SWChain(g, h, eps, T, "plus", rng).run(50_000)
_, rb_minus = SWChain(g, h, eps, T, "minus", rng).run(50_000)
print(f"Swendsen-Wang    m = {np.mean(rb_minus - rb_plus):.6f}")
