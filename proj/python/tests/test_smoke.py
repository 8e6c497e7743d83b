import math

import numpy as np
import pytest

import nashtrack


def test_chain_levels_and_tpm():
    chain = nashtrack.build_scalar_chain(2, 0.1, 1.0)
    assert np.allclose(chain.levels, [1 - math.log(2), 1 + math.log(2)])
    assert np.allclose(chain.tpm, [[0.8, 0.2], [0.2, 0.8]])


def test_sojourn_helpers():
    assert nashtrack.average_sojourn_time(0.8, 1, 1) == pytest.approx(5.0)
    assert nashtrack.sojourn_pmf(0.8, 1, 1, 2) == pytest.approx(0.16)
    eps = nashtrack.epsilon_for_sojourn(20.0, 2, 2)
    assert nashtrack.average_sojourn_time(1 - 2 * eps, 2, 2) == pytest.approx(20.0)


def test_waterfill_hand_value():
    power, level = nashtrack.waterfill(np.array([4.0, 1.0]), np.array([1.0, 1.0]), 1.0)
    assert np.allclose(power, [0.875, 0.125])
    assert level == pytest.approx(1.125)


def test_equilibrium_and_modulus():
    g = np.zeros((2, 2, 2))
    g[0, 0] = [1.0, 0.6]
    g[1, 1] = [0.8, 1.3]
    g[0, 1] = [0.2, 0.1]
    g[1, 0] = [0.1, 0.2]
    sol = nashtrack.solve_ne(g, 0.5, np.ones(2))
    assert sol["converged"] and sol["certified"]
    assert sol["p_star"].sum(axis=1) == pytest.approx([1.0, 1.0])
    d = nashtrack.optimal_scaling(g, sol["p_star"], 0.5, 0)
    beta = nashtrack.contraction_modulus(g, sol["p_star"], 0.5, 0, d)
    assert beta == pytest.approx(nashtrack.modulus_lower_bound(g, 0), abs=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    g = rng.uniform(0.1, 1.0, size=(2, 2, 3))
    p = rng.uniform(0.1, 1.0, size=(2, 3))
    f = nashtrack.gradient(g, p, 1.0, 0, 0.2)

    def lagrangian(q):
        rho = 1.0 + np.einsum("js,js->s", g[0], q)
        interference = rho - g[0, 0] * q[0]
        return np.log(rho / interference).sum() - 0.2 * q[0].sum()

    h = 1e-6
    for s in range(3):
        up, down = p.copy(), p.copy()
        up[0, s] += h
        down[0, s] -= h
        assert f[s] == pytest.approx((lagrangian(up) - lagrangian(down)) / (2 * h), rel=1e-6)


def test_bounds_and_mdp():
    b = nashtrack.theoretical_bounds(0.5, 1.0, 5.0)
    assert b["eae"] == pytest.approx(0.2)
    costs = nashtrack.desk_mdp_costs()
    assert costs["greedy"] == pytest.approx(costs["rvi"], abs=1e-9)
    assert costs["greedy"] <= min(costs["constant"]) + 1e-12


def test_small_experiment_is_deterministic():
    cfg = {"epsilon": 0.02, "horizon": 1500, "trials": 2, "policies": ["dsgpa", "con-gpa"]}
    a = nashtrack.run_experiment(cfg)
    b = nashtrack.run_experiment(cfg)
    assert [p.eae for p in a] == [p.eae for p in b]
    assert a[0].policy == "dsgpa"
    assert a[0].eae < a[1].eae


def test_bad_config_raises():
    with pytest.raises(ValueError):
        nashtrack.run_experiment({"epsilon": 0.9})
