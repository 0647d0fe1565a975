import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auvgnc.path import BernsteinPath, DegeneratePath, frame_at, omega_T
from auvgnc.pf import (
    FlowState, PathFollower, PFGains, PFParams, attitude_error, desired_frame,
    desired_frame_rate, gamma_dot, in_domain, lyapunov_value, omega_DT_D, path_errors,
    position_error, position_error_rate, saturate_command,
)
from auvgnc.se3 import hat, is_rotation, random_rotation, rot_axis, vee

PARAMS = dict(c=0.5, c1=2.0, lam=0.05, delta_lambda=0.5, delta_omega=0.01,
              omega_c_max=1.0, v_min=2.0, v_max=5.0)

coord = st.floats(-200, 200, allow_nan=False)


@settings(max_examples=200)
@given(y=coord, z=coord, d=st.floats(0.5, 500))
def test_desired_frame_is_rotation(y, z, d):
    R = desired_frame([0.0, y, z], d)
    assert is_rotation(R, tol=1e-12)
    # first axis heads back toward the path, second stays horizontal in T
    np.testing.assert_allclose(R[:, 0], np.array([d, -y, -z]) / math.sqrt(d * d + y * y + z * z),
                               atol=1e-14)
    assert R[2, 1] == 0.0


def test_desired_frame_on_path_is_identity():
    np.testing.assert_array_equal(desired_frame([3.0, 0.0, 0.0], 10.0), np.eye(3))


def test_desired_frame_ignores_along_track():
    np.testing.assert_array_equal(desired_frame([5.0, 1.0, 2.0], 7.0),
                                  desired_frame([-9.0, 1.0, 2.0], 7.0))


def test_desired_frame_rate_finite_difference(rng):
    d = 12.0
    for _ in range(20):
        p, pd = rng.normal(size=3) * 5, rng.normal(size=3)
        h = 1e-6
        fd = (desired_frame(p + h * pd, d) - desired_frame(p - h * pd, d)) / (2 * h)
        np.testing.assert_allclose(desired_frame_rate(p, pd, d), fd, atol=1e-8)


def test_omega_DT_D_is_body_rate(rng):
    d = 8.0
    for _ in range(20):
        p, pd = rng.normal(size=3) * 4, rng.normal(size=3)
        R = desired_frame(p, d)
        h = 1e-6
        Rdot = (desired_frame(p + h * pd, d) - desired_frame(p - h * pd, d)) / (2 * h)
        W = R.T @ Rdot
        np.testing.assert_allclose(omega_DT_D(p, pd, d), vee(0.5 * (W - W.T)), atol=1e-8)


def test_attitude_error_forms(rng):
    for _ in range(50):
        R_DT, R_WT = random_rotation(rng), random_rotation(rng)
        R_tilde, Psi, e_R = attitude_error(R_DT, R_WT)
        np.testing.assert_allclose(R_tilde, R_DT.T @ R_WT, atol=1e-15)
        assert Psi == pytest.approx(0.5 * (1 - R_tilde[0, 0]), abs=1e-15)
        assert 0.0 <= Psi <= 1.0 + 1e-15
        # e_R is the (pitch, yaw) part of the skew projection of R_tilde's first row
        assert e_R[0] == pytest.approx(0.5 * R_tilde[0, 2], abs=1e-15)
        assert e_R[1] == pytest.approx(-0.5 * R_tilde[0, 1], abs=1e-15)


def test_attitude_error_zero_when_aligned(rng):
    R = random_rotation(rng)
    _, Psi, e_R = attitude_error(R, R)
    assert Psi == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(e_R, 0.0, atol=1e-15)
    # a roll about the common first axis is invisible to the error
    _, Psi, e_R = attitude_error(R, R @ rot_axis(0, 0.7))
    assert Psi == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(e_R, 0.0, atol=1e-15)


def _path():
    cp = np.array([[0, 0, -30.0], [60, 0, -30], [120, 40, -20], [180, 40, -20]])
    return BernsteinPath(cp, 40.0)


def test_gamma_dot_oracle(rng):
    path = _path()
    gains = PFGains(k_gamma=0.7, k_Rtilde=0.2, d=10.0)
    frame = frame_at(path, 13.0)
    for _ in range(10):
        p = path.eval(13.0) + rng.normal(size=3)
        R = random_rotation(rng)
        flow = FlowState(p, R, 3.0)
        d1 = path.derivative(13.0)
        ref = (3.0 * R[:, 0] + 0.7 * (p - path.eval(13.0))) @ d1 / (d1 @ d1)
        assert gamma_dot(flow, frame, path, gains) == pytest.approx(ref, rel=1e-12)


def test_gamma_dot_degenerate_speed():
    path = _path()
    flow = FlowState(path.eval(0.0), np.eye(3), 2.0)
    with pytest.raises(DegeneratePath):
        gamma_dot(flow, frame_at(path, 0.0), path, PFGains(), min_speed=1e3)


def test_position_error_rate_finite_difference(rng):
    # move the vehicle along w1 and the frame along the path, compare d/dt of R_TI^T (p - p_d)
    path = _path()
    g0, gd, v = 11.0, 0.8, 4.0
    R_WI = random_rotation(rng)
    p0 = path.eval(g0) + rng.normal(size=3)

    def p_T(t):
        f = frame_at(path, g0 + gd * t)
        return position_error(FlowState(p0 + v * t * R_WI[:, 0], R_WI, v), f, path)

    h = 1e-5
    fd = (p_T(h) - p_T(-h)) / (2 * h)
    f = frame_at(path, g0)
    pT = p_T(0.0)
    speed = float(np.linalg.norm(path.derivative(g0)))
    rate = position_error_rate(pT, omega_T(f, gd), f.R_TI.T @ R_WI, v, speed, gd)
    np.testing.assert_allclose(rate, fd, atol=1e-6)


def test_command_is_feedforward_on_path():
    path = _path()
    gains = PFGains(k_gamma=1.0, k_Rtilde=0.3, d=10.0)
    f = frame_at(path, 20.0)
    flow = FlowState(path.eval(20.0), f.R_TI, 5.0)
    out = PathFollower(path, gains, PFParams(**PARAMS)).step(flow, f)
    assert out.V == pytest.approx(0.0, abs=1e-15)
    # on the path and aligned, the command is pure feed-forward of the path rate
    ff = omega_T(f, out.gamma_dot)
    np.testing.assert_allclose(out.omega_c, ff[1:], atol=1e-12)


def test_path_errors_and_lyapunov(rng):
    path = _path()
    gains = PFGains(d=10.0)
    f = frame_at(path, 5.0)
    flow = FlowState(path.eval(5.0) + np.array([0, 1.0, -2.0]), f.R_TI, 5.0)
    err = path_errors(flow, f, path, gains, 0.5)
    np.testing.assert_allclose(err.p_T, f.R_TI.T @ np.array([0, 1.0, -2.0]), atol=1e-12)
    V = lyapunov_value(err, 2.0)
    assert V == pytest.approx(err.Psi + err.p_T @ err.p_T / 4.0)
    assert in_domain(0.25, 0.5) and not in_domain(0.26, 0.5)


def test_path_follower_complete_issues_zero():
    path = _path()
    f = frame_at(path, path.final_time)
    out = PathFollower(path, PFGains()).step(FlowState(path.eval(40.0), f.R_TI, 5.0), f)
    assert out.path_complete and out.gamma_dot == 0.0
    np.testing.assert_array_equal(out.omega_c, [0.0, 0.0])


def test_saturate_command():
    cmd, sat = saturate_command([3.0, 4.0], 1.0)
    assert sat and np.linalg.norm(cmd) == pytest.approx(1.0)
    np.testing.assert_allclose(cmd, [0.6, 0.8])
    cmd, sat = saturate_command([0.3, 0.4], 1.0)
    assert not sat and np.array_equal(cmd, [0.3, 0.4])


def test_saturation_counted():
    path = _path()
    f = frame_at(path, 10.0)
    prm = PFParams(**{**PARAMS, "omega_c_max": 1e-4})
    pf = PathFollower(path, PFGains(d=5.0), prm)
    flow = FlowState(path.eval(10.0) + np.array([0, 0, 5.0]), f.R_TI, 5.0)
    out = pf.step(flow, f)
    assert out.saturated and pf.saturation_events == 1
    assert np.linalg.norm(out.omega_c) == pytest.approx(1e-4)
    assert np.linalg.norm(out.omega_c_raw) > 1e-4


def test_pf_params_formulas():
    prm = PFParams(**PARAMS)
    d = 10.0
    assert prm.lambda_limit(d) == pytest.approx(2.0 / (4.0 * math.sqrt(100 + 0.25 * 4)))
    assert prm.delta_omega_limit() == pytest.approx(2 * 0.05 * 0.5 * 0.5)
    assert prm.decay_rate() == pytest.approx(0.05)
    assert prm.ultimate_bound() == pytest.approx(0.5 * 0.5 * 0.01 / 0.025)
    assert prm.c_limit(0.5, 0.0, 0.0, 0.0) == pytest.approx(1 / math.sqrt(2))
    assert prm.c_limit(0.5, 0.1, 2.0, 0.3) == pytest.approx(0.5 / 1.0)
    chk = prm.check(PFGains(k_Rtilde=0.5, d=d))
    assert chk["c_ok"] and chk["delta_omega_ok"] and chk["lambda_ok"] is False


@pytest.mark.parametrize("bad", [dict(c1=0.0), dict(lam=-1.0), dict(delta_lambda=1.0),
                                 dict(delta_omega=-0.1), dict(v_min=6.0), dict(omega_c_max=0)])
def test_pf_params_validation(bad):
    with pytest.raises(ValueError):
        PFParams(**{**PARAMS, **bad})


def test_pf_params_from_dict_ignores_extra():
    prm = PFParams.from_dict({**PARAMS, "note": "x"})
    assert prm.c == 0.5
    with pytest.raises(KeyError):
        PFParams.from_dict({"c": 1.0})


def test_gains_validation():
    with pytest.raises(ValueError):
        PFGains(d=0.0)


def test_hat_consistency_of_feedforward():
    # omega_T seen in T has no first-axis component (no roll of the transport frame)
    path = _path()
    f = frame_at(path, 25.0)
    w = omega_T(f, 1.3)
    assert w[0] == 0.0
    np.testing.assert_allclose(hat(w) @ w, 0.0, atol=1e-18)
