import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neuroimpulse import experiments as ex
from neuroimpulse import network
from neuroimpulse.exceptions import SteeringFailed, UnsupportedLeak
from neuroimpulse.hybridsim import simulate

FIG4_B = np.array([[-1.0, 1.0, 0, 0], [0, 0, -1.0, 1.0]])


def test_null_weight_examples():
    np.testing.assert_allclose(network.compute_null_weight([[-1.0, 1.0]]).w, [2, 2])
    nw = network.compute_null_weight(FIG4_B)
    np.testing.assert_allclose(nw.w, [2, 2, 2, 2])
    assert nw.residual <= 1e-9


def test_null_weight_refuses_zero_column():
    with pytest.raises(SteeringFailed):
        network.compute_null_weight([[-1.0, 0.0, 1.0]])


def test_null_weight_refuses_one_sided_columns():
    with pytest.raises(SteeringFailed):
        network.compute_null_weight(np.eye(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_null_weight_random_spanning_sets(seed):
    rng = np.random.default_rng(seed)
    # columns V and -V always span the plane conically
    V = rng.standard_normal((2, 3))
    B = np.hstack([V, -V * rng.uniform(0.2, 3.0, 3)])
    nw = network.compute_null_weight(B)
    assert np.all(nw.w >= 1.0)
    assert np.linalg.norm(B @ nw.w) <= 1e-9 * np.linalg.norm(B)


def test_z_bounds_equal_leak():
    B = np.array([[-1.0, 1.0]])
    zb = network.z_bounds(B, [0.5, 0.5], network.compute_null_weight(B))
    assert zb.regime == "equal"
    np.testing.assert_allclose(zb.lower, [-1, -1])
    np.testing.assert_allclose(zb.upper, [1, 1])


def test_z_bounds_spread_leak():
    B = np.array([[-1.0, 1.0]])
    zb = network.z_bounds(B, [1.0, 2.0], network.compute_null_weight(B))
    assert zb.regime == "spread" and zb.gamma == -1.0
    np.testing.assert_allclose(zb.lower, [-3, -3])
    assert np.all(zb.lower <= 0) and np.all(zb.upper >= 0)


def test_z_bounds_zero_leak_spread_unsupported():
    B = np.array([[-1.0, 1.0]])
    with pytest.raises(UnsupportedLeak):
        network.z_bounds(B, [0.0, 1.0], network.compute_null_weight(B))


def test_monitor_equal_leak(connected_run):
    traj, w, zb, mon = connected_run
    assert mon.max_abs_wz <= 1e-6 * (w.w @ zb.upper)
    assert mon.max_upper_violation <= 1e-9
    assert mon.max_lower_violation <= 1e-9
    assert mon.max_d1 <= mon.d1_bound and mon.max_d2 <= mon.d2_bound


def test_monitor_spread_leak():
    traj, w, zb, mon = ex.run_connected(lam=[0.2, 0.2, 0.4, 0.4])
    assert zb.regime == "spread"
    wz = traj.z @ w.w
    assert np.all(wz >= mon.wz_lower_limit - 1e-9) and np.all(wz <= mon.wz_upper_limit + 1e-9)
    assert mon.max_lower_violation <= 1e-9 and mon.max_upper_violation <= 1e-9


def test_monitor_at_rest():
    plant, ctrl = ex.connected_setup()
    traj = simulate(plant, ctrl, [0.0, 0.0], 1.0, 1e-3)
    w = network.compute_null_weight(ctrl.B)
    mon = network.monitor_connected(traj, w, network.z_bounds(ctrl.B, ctrl.lambdas, w))
    assert mon.max_abs_wz == 0 and mon.max_d1 == 0 and mon.max_d2 == 0


def test_monitor_rejects_independent(fig4_runs):
    traj = fig4_runs[0.5]
    w = network.compute_null_weight(traj.ctrl.B)
    with pytest.raises(TypeError):
        network.monitor_connected(traj, w, network.z_bounds(traj.ctrl.B, traj.ctrl.lambdas, w))


def test_connected_envelope_dominates(connected_run):
    traj = connected_run[0]
    r = network.connected_bound(traj.plant.matrix, traj.ctrl)
    assert r.applicable
    assert ex.envelope_slack(traj, r) >= -1e-6
    assert ex.limsup_norm(traj, 10.0) <= r.ultimate_bound
