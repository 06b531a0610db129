import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rendezvous.network import NetworkModel
from rendezvous.sim import (Scenario, ScenarioError, SimulationBlowUp, accumulate_cost,
                            consensus_reached, max_pairwise_distance, simulate)
from rendezvous.core import RobotModel
from rendezvous.topology import Topology

from conftest import base_scenario, scalar_scenario

PERFECT_FIXTURES = [
    "base_q3_r1", "base_q1_r5", "base_q20_r1", "base_q3_r1_undirected",
    "base_q3_r1_unbounded", "base_q20_r1_unbounded", "two_robot_unconstrained",
]


def test_consensus_reached_examples():
    assert consensus_reached(np.zeros((3, 2)), 1e-9)
    assert not consensus_reached([0.0, 0.1], 0.05)
    assert consensus_reached([0.0, 0.04, 0.02], 0.05)
    with pytest.raises(ValueError):
        consensus_reached([0.0], 0.0)


def test_coincident_robots_stay_put():
    s = base_scenario(topology=Topology.complete(4)).replace(x0=np.full((4, 2), 0.7))
    log = simulate(s)
    assert np.all(log.u == 0)
    assert np.all(log.x == 0.7)
    assert log.j_total == 0
    assert log.consensus_time == 0.0


def test_base_scenario_converges_before_10s():
    log = simulate(base_scenario())
    assert log.consensus_time is not None and log.consensus_time < 10.0
    # robot 3 is the only root and never moves
    assert np.all(log.x[:, 2] == 0.0)


def test_undirected_variant_agrees_on_the_mean():
    log = simulate(base_scenario(topology=Topology.path(4)))
    assert log.consensus_time is not None
    np.testing.assert_allclose(log.x[-1, :, 0], 0.0, atol=1e-3)


def test_saturated_run_is_piecewise_linear():
    log = simulate(base_scenario(q=20.0))
    assert np.any(np.abs(log.u[0]) == 0.5)
    assert np.all(log.u_raw[0, [0, 3], 0] * [1, -1] > 0.5)
    sat = log.saturated
    # second differences over steps where the same saturated control is held
    for k in range(1, len(log.t) - 1):
        both = sat[k - 1] & sat[k] & (log.u[k - 1] == log.u[k])
        if np.any(both):
            d2 = log.x[k + 1] - 2 * log.x[k] + log.x[k - 1]
            assert np.all(np.abs(d2[both]) <= 1e-6)


def test_applied_controls_respect_bounds():
    for q in (1.0, 3.0, 20.0):
        log = simulate(base_scenario(q=q))
        assert np.all(log.u >= -0.5) and np.all(log.u <= 0.5)


def test_saturated_flag_definition():
    log = simulate(base_scenario(q=20.0))
    np.testing.assert_array_equal(log.saturated, np.abs(log.u_raw) > 0.5)


def test_cumulative_cost_nondecreasing():
    log = simulate(base_scenario(q=20.0))
    assert np.all(np.diff(log.j_cum) >= 0)
    assert np.all(np.diff(log.ji_cum, axis=0) >= 0)
    np.testing.assert_allclose(log.ji_cum.sum(axis=1), log.j_cum, rtol=1e-14)


def test_accumulate_cost_zero_trajectory():
    j, ji = accumulate_cost(np.zeros((5, 3)), np.zeros((5, 3)), 0.1)
    assert np.all(j == 0) and ji.shape == (5, 3)


def test_accumulate_cost_quadrature_rules():
    state = np.array([[0.0], [1.0], [4.0]])
    effort = np.array([[2.0], [3.0], [99.0]])
    j, _ = accumulate_cost(state, effort, 0.5)
    # trapezoid on state, held (left) value on effort
    np.testing.assert_allclose(j, [0.0, 0.25 + 1.0, 0.25 + 1.0 + 1.25 + 1.5])


@pytest.mark.parametrize("name", PERFECT_FIXTURES)
def test_lyapunov_nonincreasing_at_control_ticks(load, name):
    s = load(name)
    log = simulate(s)
    ticks = slice(None, None, int(round(s.control_period / s.dt)))
    tol = 1e-7 * (1 + log.v_quad[0])
    assert np.diff(log.v_quad[ticks]).max() <= tol
    assert np.diff(log.v_sat[ticks]).max() <= 1e-7 * (1 + log.v_sat[0])


def test_halving_dt_changes_cost_little():
    s = base_scenario()
    a = simulate(s).j_total
    b = simulate(s.replace(dt=0.005)).j_total
    assert abs(a - b) / a < 0.01


def test_two_robot_cost_ratio():
    s = scalar_scenario([[0, 1], [1, 0]], [1.0, 0.0], t_end=10.0)
    log = simulate(s)
    # e(t) = e0 exp(-2t): J = e0^2 / 2, V(0) = e0^2
    assert log.j_total / log.v_quad[0] == pytest.approx(0.5, abs=0.01)
    fine = simulate(s.replace(control_period=0.001, dt=0.001))
    assert fine.j_total / fine.v_quad[0] == pytest.approx(0.5, abs=1e-4)


def test_average_conserved_without_saturation():
    log = simulate(base_scenario(bound=None, topology=Topology.path(4)))
    mean = log.x.mean(axis=1)
    np.testing.assert_allclose(mean, np.broadcast_to(mean[0], mean.shape), rtol=0, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_translation_invariance(dx, dy):
    s = base_scenario(q=20.0, t_end=3.0)
    shift = np.array([dx, dy])
    a = simulate(s)
    b = simulate(s.replace(x0=s.x0 + shift))
    np.testing.assert_allclose(b.x, a.x + shift, atol=1e-9)
    np.testing.assert_allclose(b.u, a.u, atol=1e-8)
    np.testing.assert_allclose(b.j_cum, a.j_cum, rtol=1e-7, atol=1e-12)
    np.testing.assert_allclose(b.v_quad, a.v_quad, rtol=1e-7, atol=1e-12)


def test_determinism_with_lossy_network():
    s = base_scenario(network=NetworkModel(2, 0.2, 1e-3), seed=11)
    a, b = simulate(s), simulate(s)
    assert a.x.tobytes() == b.x.tobytes()
    assert a.u.tobytes() == b.u.tobytes()
    c = simulate(s.replace(seed=12))
    assert c.x.tobytes() != a.x.tobytes()


def test_zero_horizon():
    log = simulate(base_scenario(t_end=0.0))
    assert log.x.shape == (1, 4, 2) and log.j_total == 0


def test_laplacian_weighted_variant_converges():
    log = simulate(base_scenario(law_variant="laplacian_weighted"))
    assert log.consensus_time is not None


def test_no_spanning_tree_warns():
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = a[2, 3] = a[3, 2] = 1
    with pytest.warns(RuntimeWarning, match="spanning tree"):
        simulate(base_scenario(topology=Topology(a), t_end=1.0))


def test_blow_up_detected():
    s = scalar_scenario([[0, 1], [1, 0]], [1.0, 0.0], q=1e4, control_period=1.0, dt=0.5, t_end=200)
    with pytest.raises(SimulationBlowUp):
        simulate(s)


@pytest.mark.parametrize("changes, pointer", [
    (dict(dt=0.2), "/dt"),
    (dict(dt=0.03), "/control_period"),
    (dict(consensus_tol=0.0), "/consensus_tol"),
    (dict(law_variant="nope"), "/law_variant"),
    (dict(network=NetworkModel(0, 1.0, 0.0)), "/network/drop_probability"),
    (dict(network=NetworkModel(-1, 0.0, 0.0)), "/network/delay_periods"),
    (dict(network=NetworkModel(0, 0.0, -1.0)), "/network/sensor_noise_std"),
    (dict(u_min=1.0), "/bounds"),
    (dict(x0=np.zeros((3, 2))), "/x0"),
    (dict(q=-np.eye(2)), "/q"),
    (dict(r=np.zeros((2, 2))), "/r"),
])
def test_invalid_scenarios(changes, pointer):
    with pytest.raises(ScenarioError) as exc:
        base_scenario().replace(**changes)
    assert pointer in [p for p, _ in exc.value.errors]


@pytest.mark.parametrize("lo, hi", [(-0.5, 0.5), (0.0, 0.5), (-0.5, 0.0)])
@pytest.mark.parametrize("n", [3, 4])
def test_bounds_endpoint_cases(load, lo, hi, n):
    case = {(-0.5, 0.5): "a", (0.0, 0.5): "b", (-0.5, 0.0): "c"}[(lo, hi)]
    s = load(f"bounds_{case}_n{n}")
    log = simulate(s)
    assert log.consensus_time is not None
    final = log.x[-1, :, 0].mean()
    x0 = s.x0[:, 0]
    if case == "a":
        assert x0.min() < final < x0.max()
    elif case == "b":
        assert final == pytest.approx(x0.max(), abs=s.consensus_tol)
    else:
        assert final == pytest.approx(x0.min(), abs=s.consensus_tol)


@pytest.mark.parametrize("n", [3, 4])
def test_bounds_zero_bounds_freeze_positions(load, n):
    s = load(f"bounds_d_n{n}")
    log = simulate(s)
    assert all(np.array_equal(xk, s.x0) for xk in log.x)


def test_empirical_exit_time_converges_to_reentry_time():
    """Leader at 0, one follower at 1 with bound 0.5: exit at x = 0.5/k, t = 1."""
    errs = []
    for dt in (0.01, 0.005, 0.0025):
        s = scalar_scenario([[0, 0], [1, 0]], [0.0, 1.0], lo=-0.5, hi=0.5,
                            control_period=dt, dt=dt, t_end=2.0)
        log = simulate(s)
        (p,) = log.predictions
        assert log.reentry_times[0]["t_reentry"] == pytest.approx(1.0)
        assert np.isfinite(p.t_s) and p.t_s > 0
        exit_t = next(e.time for e in log.events if e.robot_index == 1)
        errs.append(exit_t - 1.0)
    errs = np.abs(errs)
    assert errs[-1] < errs[0]
    assert errs[0] <= 2 * 0.01 and errs[-1] <= 2 * 0.0025
