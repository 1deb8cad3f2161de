import math

import numpy as np
import pytest

from rfimlab.exactgibbs import (EnumerationCapError, exact_boundary_influence,
                                exact_spin_marginal, glauber_run, glauber_step,
                                hamiltonian, heat_bath_prob, partition_function,
                                spin_distribution, states_to_spins)
from rfimlab.fixtures import box_223, cube_fixture, es_fixtures, fixture_field
from rfimlab.lattice import lattice_graph

from oracles import batch_means, naive_log_partition


def _parts(g):
    inner = [tuple(e) for e in g.internal.tolist()]
    return inner, g.boundary_degree.tolist()


def test_hamiltonian_examples():
    g = lattice_graph(1)
    s = np.ones(27, dtype=np.int8)
    assert hamiltonian(g, s, "plus") == -108
    s[g.origin] = -1
    assert hamiltonian(g, s, "plus") == -96
    g0 = lattice_graph(0)
    assert hamiltonian(g0, [1], "plus", [0.7], 0.3) == pytest.approx(-(6 + 0.21))


def test_spin_flip_covariance():
    g = box_223()
    h = fixture_field(g, 1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = rng.choice([-1, 1], g.n_sites)
        assert hamiltonian(g, -s, "minus", -h, 0.4) == hamiltonian(g, s, "plus", h, 0.4)


def test_partition_single_site():
    g = lattice_graph(0)
    assert partition_function(g, "plus", T=2.0) == pytest.approx(math.log(math.exp(3) + math.exp(-3)))


def test_partition_high_temperature():
    g = cube_fixture()
    assert partition_function(g, "plus", fixture_field(g, 0), 0.3, 1e7) == pytest.approx(
        8 * math.log(2), abs=1e-5)


@pytest.mark.parametrize("g", es_fixtures(), ids=lambda g: g.name)
def test_partition_matches_naive_loop(g):
    h = fixture_field(g, 3)
    inner, bdeg = _parts(g)
    for bc, sign in (("plus", 1), ("minus", -1)):
        ref = naive_log_partition(g.n_sites, inner, bdeg, sign, (0.3 * h).tolist(), 1.3)
        assert partition_function(g, bc, h, 0.3, 1.3) == pytest.approx(ref, rel=1e-10)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapError):
        partition_function(lattice_graph(2), "plus")


def test_marginal_examples():
    g = lattice_graph(0)
    assert exact_spin_marginal(g, "plus", T=2.0) == pytest.approx(0.997527, abs=1e-6)
    assert exact_boundary_influence(g, T=2.0) == pytest.approx(0.995055, abs=1e-6)
    assert exact_spin_marginal(cube_fixture(), "plus", T=1e8) == pytest.approx(0.5, abs=1e-6)
    assert exact_boundary_influence(cube_fixture(), T=1e8) == pytest.approx(0, abs=1e-6)


@pytest.mark.parametrize("g", es_fixtures(), ids=lambda g: g.name)
def test_global_symmetry_and_fkg(g):
    h = fixture_field(g, 5)
    plus = exact_spin_marginal(g, "plus", h, 0.5, 1.7)
    minus_flipped = 1 - exact_spin_marginal(g, "minus", -h, 0.5, 1.7)
    assert plus == pytest.approx(minus_flipped, abs=1e-14)
    assert exact_boundary_influence(g, h, 0.5, 1.7) >= 0


def test_eps_zero_is_pure_ising():
    g = box_223()
    h = fixture_field(g, 2)
    assert exact_spin_marginal(g, "plus", h, 0.0, 2.0) == exact_spin_marginal(g, "plus", None, 0.0, 2.0)


def test_influence_decreasing_in_T():
    for g in (cube_fixture(), box_223()):
        m = [exact_boundary_influence(g, T=T) for T in (1.0, 2.0, 4.0)]
        assert m[0] > m[1] > m[2]


def test_distribution_normalised_and_states():
    g = cube_fixture()
    mu = spin_distribution(g, "plus", fixture_field(g, 0), 0.2, 1.5)
    assert mu.sum() == pytest.approx(1.0, abs=1e-12)
    s = states_to_spins(np.array([0, 5]), 3)
    assert s.tolist() == [[-1, -1, -1], [1, -1, 1]]


def test_glauber_zero_temperature_aligns():
    g = lattice_graph(0)
    assert heat_bath_prob(g, [1], 0, "minus", [100.0], 1.0, T=1e-3) == 1.0
    assert heat_bath_prob(g, [1], 0, "plus", [-100.0], 1.0, T=1e-3) == 0.0


def test_glauber_two_state_stationary():
    g = lattice_graph(0)
    h, eps, T = [0.8], 0.5, 2.5
    a = heat_bath_prob(g, [1], 0, "plus", h, eps, T)
    # heat bath ignores the current value: both rows of the kernel are (1-a, a)
    K = np.array([[1 - a, a], [1 - a, a]])
    mu = spin_distribution(g, "plus", h, eps, T)
    assert np.allclose(mu @ K, mu, atol=1e-15)


def test_glauber_step_changes_one_site():
    g = cube_fixture()
    s = np.ones(8, dtype=np.int8)
    rng = np.random.default_rng(1)
    for _ in range(20):
        t = glauber_step(g, s, "plus", T=3.0, rng=rng)
        assert np.sum(t != s) <= 1
        s = t


def test_glauber_long_run_matches_exact():
    g = cube_fixture()
    h = fixture_field(g, 4)
    exact = exact_spin_marginal(g, "plus", h, 0.4, 2.2)
    _, trace = glauber_run(g, np.ones(8), "plus", h, 0.4, 2.2, 400_000,
                           np.random.default_rng(3))
    m, se = batch_means((trace[8000:] == 1).astype(float))
    assert abs(m - exact) < 3 * se
