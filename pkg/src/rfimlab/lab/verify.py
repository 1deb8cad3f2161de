"""Exact-oracle invariant suite.

Each check yields ``{id, tolerance, residual, passed}``.  ``cosh_shift``
perturbs the reference FK weight used by the bond-marginal check; a
nonzero value is a negative control and must make that check fail.
"""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..coarsegrain import (brute_force_outmost_boundary, coloring_from_blue, decompose,
                           extract_outmost_blue_boundary)
from ..exactgibbs import exact_spin_marginal, partition_function, spin_distribution
from ..fixtures import es_fixtures, fixture_field, six_site
from ..fkising import (bond_states, enumerate_fk_weights, exact_sw_kernel, find_clusters,
                       joint_es_enumeration, log2cosh, temperature_to_p)
from ..lattice import CoarseGrid, Region, internal_edges, lattice_graph
from ..metricpartition import FiniteMetricSpace, ckr_partition

T_CHECK = 1.7
EPS_CHECK = 0.3


def _record(cid, tol, residual):
    residual = float(residual)
    return {"id": cid, "tolerance": tol, "residual": residual,
            "passed": bool(np.isfinite(residual) and residual <= tol)}


def reference_fk_log_weights(graph, h, eps, T, cosh_shift: float = 0.0) -> np.ndarray:
    """Unnormalised log FK weights from cluster sums, one bond state at a time."""
    p = temperature_to_p(T)
    out = np.empty(1 << graph.n_edges)
    for w, omega in enumerate(bond_states(graph.n_edges)):
        cl = find_clusters(graph, omega, h, eps)
        x = cl.field_sums / T
        free = np.arange(cl.n_clusters) != cl.ghost_label
        k = omega.sum()
        out[w] = (k * np.log(p) + (graph.n_edges - k) * np.log1p(-p)
                  + (log2cosh(x[free]) + cosh_shift).sum() + x[cl.ghost_label])
    return out


def _tv(a, b) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def es_checks(cosh_shift: float = 0.0):
    out = []
    for i, g in enumerate(es_fixtures()):
        h = fixture_field(g, i)
        joint = joint_es_enumeration(g, "plus", h, EPS_CHECK, T_CHECK)
        mu = spin_distribution(g, "plus", h, EPS_CHECK, T_CHECK)
        out.append(_record(f"es_spin_marginal[{g.name}]", 1e-10, _tv(joint.spin_marginal(), mu)))
        lw = reference_fk_log_weights(g, h, EPS_CHECK, T_CHECK, cosh_shift)
        phi = np.exp(lw - logsumexp(lw))
        out.append(_record(f"es_bond_marginal[{g.name}]", 1e-10, _tv(joint.bond_marginal(), phi)))
        logw, rb = enumerate_fk_weights(g, h, EPS_CHECK, T_CHECK)
        fk_side = float(np.exp(logw - logsumexp(logw)) @ rb)
        ising_side = 1.0 - exact_spin_marginal(g, "plus", h, EPS_CHECK, T_CHECK)
        out.append(_record(f"expression_step1[{g.name}]", 1e-9, abs(fk_side - ising_side)))
        logZ_mu = partition_function(g, "plus", h, EPS_CHECK, T_CHECK)
        out.append(_record(f"partition_function_equal[{g.name}]", 1e-9,
                           abs(joint.log_Z - logZ_mu + g.n_edges / T_CHECK)))
    return out


def sw_checks():
    out = []
    for g in (lattice_graph(0), six_site()):
        h = fixture_field(g, 7)
        K = exact_sw_kernel(g, h, EPS_CHECK, T_CHECK)
        mu = spin_distribution(g, "plus", h, EPS_CHECK, T_CHECK)
        out.append(_record(f"sw_stationarity[{g.name}]", 1e-9, _tv(mu @ K, mu)))
    return out


def geometry_checks():
    worst = 0
    for N in range(17):
        r = Region(N)
        worst = max(worst, abs(2 * len(internal_edges(r)) + 6 * (2 * N + 1) ** 2 - 6 * r.n_sites))
    return [_record("handshake_identity", 0, worst)]


def extraction_checks(n_random: int = 40, seed: int = 11):
    rng = np.random.default_rng(seed)
    grid = CoarseGrid(4, 1)
    centre = np.array(grid.shape) // 2
    mismatches = violations = 0
    for _ in range(n_random):
        blue = np.zeros(grid.shape, dtype=bool)
        for _ in range(rng.integers(1, 11)):
            blue[tuple(centre + rng.integers(-2, 3, 3))] = True
        col = coloring_from_blue(grid, blue)
        B, Bp = extract_outmost_blue_boundary(col, 1)
        best = brute_force_outmost_boundary(col)
        same = (not B.any() and not best) or (len(best) == 1 and np.array_equal(best[0], B))
        mismatches += not same
        if B.any():
            dec = decompose(col, B, Bp, 1, strict=False)
            violations += sum(not r["ok"] for r in dec.report if not r.get("informational"))
    return [_record("outmost_boundary_brute_force", 0, mismatches),
            _record("decomposition_invariants", 0, violations)]


def partition_checks(samples: int = 1000, seed: int = 5):
    rng = np.random.default_rng(seed)
    X = FiniteMetricSpace(rng.integers(0, 20, size=(200, 3)), "chebyshev")
    R = 8.0
    worst = 0.0
    for _ in range(samples):
        part = ckr_partition(X, R, rng)
        worst = max(worst, max(X.diameter(b) for b in part.blocks) - R)
    return [_record("ckr_R_bounded", 0.0, max(worst, 0.0))]


def run_verify_suite(cosh_shift: float = 0.0) -> list[dict]:
    checks = []
    checks += geometry_checks()
    checks += es_checks(cosh_shift)
    checks += sw_checks()
    checks += extraction_checks()
    checks += partition_checks()
    return checks


def all_passed(checks) -> bool:
    return all(c["passed"] for c in checks)
