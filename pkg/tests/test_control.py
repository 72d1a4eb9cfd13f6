from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sms_handover.control import (DEFAULT_ROLLING_SCHEDULE, INTEGRAL_CLAMP, NmpcConfig, PidGains, TrackingError,
                                  evaluate_tracking_cost, nmpc_torque, pid_forces, pid_torque,
                                  rolling_period_schedule)
from sms_handover.dynamics import forward_dynamics
from sms_handover.verify import nmpc_identity_error, random_state


def test_default_pid_gains():
    g = PidGains.uniform()
    assert np.all(g.kp == 2.0) and np.all(g.ki == 1.0) and np.all(g.kd == 1.5)
    assert g.kp.shape == (14,)
    with pytest.raises(ValueError):
        PidGains.uniform(kp=-1.0)


def test_pid_restoring_sign():
    e = TrackingError(np.full(14, 0.1), np.zeros(14))
    assert np.all(pid_torque(e, PidGains.uniform()) < 0)
    f = pid_forces(e, PidGains.uniform())
    assert f.is_free_floating and np.allclose(f.joint_torques, -0.2)


vec14 = st.lists(st.floats(-3, 3), min_size=14, max_size=14).map(np.array)


@settings(max_examples=50)
@given(vec14, vec14, vec14, vec14, vec14, vec14, st.floats(-3, 3))
def test_pid_is_linear(e1, i1, d1, e2, i2, d2, a):
    g = PidGains.uniform()
    u1 = pid_torque(TrackingError(e1, d1, i1), g)
    u2 = pid_torque(TrackingError(e2, d2, i2), g)
    u = pid_torque(TrackingError(e1 + a * e2, d1 + a * d2, i1 + a * i2), g)
    assert np.allclose(u, u1 + a * u2, atol=1e-9)


def test_integral_anti_windup():
    err = TrackingError(np.full(14, 5.0), np.zeros(14))
    for _ in range(100):
        err.accumulate(0.1)
    assert np.all(err.integral_e == INTEGRAL_CLAMP)
    err.e = -err.e
    err.accumulate(0.1)
    assert np.allclose(err.integral_e, INTEGRAL_CLAMP - 0.5)


def test_nmpc_gain_formulas():
    c1, c2 = NmpcConfig(1.0), NmpcConfig(2.0)
    assert c1.a1 == pytest.approx(10 / 3) and c1.a2 == 2.5
    assert c2.a1 == pytest.approx(5 / 6) and c2.a2 == 1.25
    A1, A2 = c1.gain_matrices()
    assert np.array_equal(A1, c1.a1 * np.eye(14))
    with pytest.raises(ValueError):
        NmpcConfig(0.0)


@given(st.floats(0.05, 20.0))
def test_nmpc_gain_monotonicity(t_r):
    full, half = NmpcConfig(t_r), NmpcConfig(t_r / 2)
    assert half.a1 == pytest.approx(4 * full.a1, rel=1e-15)
    assert half.a2 == pytest.approx(2 * full.a2, rel=1e-15)


def test_nmpc_identity_and_free_floating(model, rng):
    for _ in range(30):
        s = random_state(rng)
        q_d, qd_d, qdd_d = rng.uniform(-1, 1, (3, 14))
        f = nmpc_torque(model, s, (q_d, qd_d, qdd_d), NmpcConfig(1.0))
        assert np.array_equal(f.base, np.zeros(6))
        assert nmpc_identity_error(model, s, q_d, qd_d, qdd_d, rng.choice([0.5, 1.0, 2.0])) < 1e-9


def test_nmpc_at_rest_on_target_only_cancels_bias(model, rng):
    """Zero error and zero desired motion: torque holds the joints against velocity products."""
    s = random_state(rng)
    f = nmpc_torque(model, s, (s.q[6:], s.q_dot[6:], np.zeros(14)), NmpcConfig(1.0))
    qdd = forward_dynamics(model, s, f)
    assert np.allclose(qdd[6:], 0.0, atol=1e-10)


def test_tracking_cost():
    t = np.linspace(0, 2, 201)
    assert evaluate_tracking_cost(t, np.ones_like(t)) == pytest.approx(1.0)
    assert evaluate_tracking_cost(t, np.zeros((201, 3))) == 0.0
    # 1/2 int_0^1 t^2 dt = 1/6
    assert evaluate_tracking_cost(t, t, horizon=(0.0, 1.0)) == pytest.approx(1 / 6, rel=1e-4)
    with pytest.raises(ValueError, match="empty horizon"):
        evaluate_tracking_cost(t, t, horizon=(1.0, 1.0))


def test_rolling_period_schedule():
    assert DEFAULT_ROLLING_SCHEDULE == {"pre_grasp": 1.0, "post_grasp": 2.0}
    assert rolling_period_schedule(SimpleNamespace(post_grasp=False)) == 1.0
    assert rolling_period_schedule(SimpleNamespace(post_grasp=True)) == 2.0
    assert rolling_period_schedule(SimpleNamespace(post_grasp=True, rolling_period=0.7)) == 0.7
    assert rolling_period_schedule("post_grasp", {"pre_grasp": 3.0, "post_grasp": 4.5}) == 4.5
