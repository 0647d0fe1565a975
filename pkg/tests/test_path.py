import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb

from auvgnc.core import kernels
from auvgnc.path import (
    BernsteinPath, DegeneratePath, GammaOutOfRange, PathBounds, bending_magnitude,
    curvature_torsion, frame_at, initial_frame, is_frame_orthonormal, omega_T, propagate_frame,
    validate_bounds,
)


def bernstein_sum(cp, s):
    """Direct Bernstein-basis evaluation (independent of de Casteljau)."""
    n = len(cp) - 1
    w = np.array([comb(n, k) * s ** k * (1 - s) ** (n - k) for k in range(n + 1)])
    return w @ cp


def random_path(rng, n=5, T=40.0):
    steps = rng.normal(size=(n + 1, 3)) * 4.0 + np.array([12.0, 0, 0])
    return BernsteinPath(np.cumsum(steps, axis=0), T)


def test_eval_matches_bernstein_sum(rng):
    for n in (1, 3, 5, 9):
        p = random_path(rng, n)
        for g in np.linspace(0, p.final_time, 7):
            np.testing.assert_allclose(p.eval(g), bernstein_sum(p.control_points, g / p.final_time),
                                       rtol=1e-12, atol=1e-10)


def test_endpoints(rng):
    p = random_path(rng)
    cp, T, n = p.control_points, p.final_time, p.degree
    np.testing.assert_allclose(p.eval(0.0), cp[0], atol=1e-12)
    np.testing.assert_allclose(p.eval(T), cp[-1], atol=1e-12)
    np.testing.assert_allclose(p.derivative(0.0), n * (cp[1] - cp[0]) / T, atol=1e-12)
    np.testing.assert_allclose(p.derivative(T), n * (cp[-1] - cp[-2]) / T, atol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_derivatives_match_finite_differences(rng, order):
    p = random_path(rng, 6)
    h = 1e-3
    for g in (5.0, 17.0, 31.0):
        if order == 1:
            fd = (p.eval(g + h) - p.eval(g - h)) / (2 * h)
        elif order == 2:
            fd = (p.eval(g + h) - 2 * p.eval(g) + p.eval(g - h)) / h ** 2
        else:
            fd = (p.derivative(g + h, 2) - p.derivative(g - h, 2)) / (2 * h)
        np.testing.assert_allclose(p.derivative(g, order), fd, rtol=1e-5, atol=1e-7)


def test_gamma_out_of_range(rng):
    p = random_path(rng)
    with pytest.raises(GammaOutOfRange):
        p.eval(-0.1)
    with pytest.raises(GammaOutOfRange):
        p.derivative(p.final_time * 1.01)


def test_invalid_construction():
    with pytest.raises(ValueError):
        BernsteinPath(np.zeros((1, 3)), 1.0)
    with pytest.raises(ValueError):
        BernsteinPath(np.zeros((3, 2)), 1.0)
    with pytest.raises(ValueError):
        BernsteinPath(np.ones((3, 3)), 0.0)


def test_stationary_path_rejected():
    with pytest.raises(DegeneratePath):
        BernsteinPath.from_json({"control_points": [[0, 0, 0]] * 4, "final_time": 10.0})


def test_json_round_trip(rng, tmp_path):
    p = random_path(rng)
    f = tmp_path / "p.json"
    f.write_text(json.dumps(p.to_json()))
    q = BernsteinPath.load(f)
    assert np.array_equal(q.control_points, p.control_points) and q.final_time == p.final_time
    bad = p.to_json()
    bad["degree"] = 2
    with pytest.raises(ValueError):
        BernsteinPath.from_json(bad)


def test_straight_path_frame_constant():
    p = BernsteinPath(np.array([[0, 0, -10.0], [30, 40, -10], [60, 80, -10], [90, 120, -10]]), 30.0)
    f0 = initial_frame(p)
    for g in np.linspace(0, 30, 11):
        f = propagate_frame(p, f0, g)
        assert abs(f.k1) < 1e-10 and abs(f.k2) < 1e-10
        np.testing.assert_allclose(f.R_TI, f0.R_TI, atol=1e-12)
    assert np.allclose(omega_T(f0, 3.0), 0.0)


def test_initial_frame_uses_world_down():
    p = BernsteinPath(np.array([[0, 0, 0.0], [10, 0, 0], [20, 5, 0]]), 10.0)
    f = initial_frame(p)
    np.testing.assert_allclose(f.t2, [0, 0, -1.0], atol=1e-15)
    assert is_frame_orthonormal(f)
    assert np.linalg.det(f.R_TI) == pytest.approx(1.0)


def test_vertical_tangent_falls_back_to_world_y():
    p = BernsteinPath(np.array([[0, 0, 0.0], [0, 0, 10], [5, 0, 20]]), 10.0)
    f = initial_frame(p)
    assert is_frame_orthonormal(f)
    assert abs(np.dot(f.t1, [0, 0, 1])) == pytest.approx(1.0)


def test_horizontal_curve_keeps_normal_vertical():
    # parallel transport of the world-down normal along a horizontal curve never tilts it
    cp = np.array([[0, 0, -20.0], [40, 0, -20], [60, 30, -20], [60, 70, -20], [90, 90, -20]])
    p = BernsteinPath(cp, 40.0)
    f = initial_frame(p)
    for g in np.linspace(0, 40, 9)[1:]:
        f = propagate_frame(p, f, g)
        np.testing.assert_allclose(f.t2, [0, 0, -1.0], atol=1e-12)
        assert abs(f.k1) < 1e-12
        assert abs(f.k2) == pytest.approx(bending_magnitude(p, g), rel=1e-12)


def test_bending_is_curvature_times_speed(rng):
    p = random_path(rng)
    for g in (3.0, 20.0, 37.0):
        f = frame_at(p, g)
        d1, d2 = p.derivative(g, 1), p.derivative(g, 2)
        sp = np.linalg.norm(d1)
        kappa_geo = np.linalg.norm(np.cross(d1, d2)) / sp ** 3
        assert math.hypot(f.k1, f.k2) == pytest.approx(kappa_geo * sp, rel=1e-10)


def test_curvature_against_polyline_three_point():
    cp = np.array([[0, 0, -5.0], [50, 0, -5], [50, 50, -5]])     # planar quadratic
    p = BernsteinPath(cp, 20.0)
    for g in (5.0, 10.0, 15.0):
        h = 1e-3
        a, b, c = p.eval(g - h), p.eval(g), p.eval(g + h)
        # circumscribed-circle curvature of the three points
        area2 = np.linalg.norm(np.cross(b - a, c - a))
        k3 = 2 * area2 / (np.linalg.norm(b - a) * np.linalg.norm(c - b) * np.linalg.norm(c - a))
        f = frame_at(p, g)
        assert math.hypot(f.k1, f.k2) / np.linalg.norm(p.derivative(g)) == pytest.approx(k3, rel=1e-5)


def test_torsion_definition(rng):
    p = random_path(rng, 3)
    for g in (10.0, 20.0, 30.0):
        f = frame_at(p, g)
        ct = curvature_torsion(p, f)
        assert ct.torsion_defined
        # finite difference of the bending angle at dgamma = 1e-4
        lo, hi = propagate_frame(p, f, g - 1e-4), propagate_frame(p, f, g + 1e-4)
        fd = -(math.atan2(hi.k2, hi.k1) - math.atan2(lo.k2, lo.k1)) / 2e-4
        assert ct.tau == pytest.approx(fd, rel=1e-9)
        # the defining sign makes this the negative of the Frenet torsion (per unit gamma)
        d1, d2, d3 = (p.derivative(g, k) for k in (1, 2, 3))
        c = np.cross(d1, d2)
        frenet = np.dot(c, d3) / np.dot(c, c) * np.linalg.norm(d1)
        assert ct.tau == pytest.approx(-frenet, rel=1e-6)


def test_torsion_planar_and_straight():
    planar = BernsteinPath(np.array([[0, 0, 0.0], [10, 0, 0], [20, 10, 0], [30, 0, 0]]), 10.0)
    ct = curvature_torsion(planar, frame_at(planar, 4.0))
    assert ct.tau == pytest.approx(0.0, abs=1e-9)
    straight = BernsteinPath(np.array([[0, 0, 0.0], [10, 0, 0]]), 10.0)
    ct = curvature_torsion(straight, frame_at(straight, 4.0))
    assert ct == (0.0, 0.0, False)


def test_one_call_matches_chained_calls(rng):
    p = random_path(rng)
    one = propagate_frame(p, initial_frame(p), p.final_time)
    f = initial_frame(p)
    for g in np.linspace(0, p.final_time, 101)[1:]:
        f = propagate_frame(p, f, g)
    np.testing.assert_allclose(f.R_TI, one.R_TI, atol=1e-6)


def test_backward_propagation_returns(rng):
    p = random_path(rng)
    f0 = initial_frame(p)
    back = propagate_frame(p, propagate_frame(p, f0, p.final_time), 0.0)
    np.testing.assert_allclose(back.R_TI, f0.R_TI, atol=1e-8)


def test_omega_T_norm(rng):
    p = random_path(rng)
    f = frame_at(p, 12.0)
    for gd in (-2.0, 0.3, 1.7):
        assert np.linalg.norm(omega_T(f, gd)) == pytest.approx(
            math.sqrt(f.k1 ** 2 + f.k2 ** 2) * abs(gd), rel=4e-16)


def test_validate_bounds(rng):
    p = random_path(rng)
    g = np.linspace(0, p.final_time, 2001)
    sp = [np.linalg.norm(p.derivative(x)) for x in g]
    loose = PathBounds(0.5 * min(sp), 2 * max(sp), 10.0)
    rep = validate_bounds(p, loose)
    assert rep.passed and rep.to_json()["passed"]
    tight = PathBounds(0.5 * min(sp), 0.9 * max(sp), 10.0)
    assert not validate_bounds(p, tight).speed_ok
    assert not validate_bounds(p, PathBounds(0.1, 100.0, 1e-6)).rate_ok
    with pytest.raises(ValueError):
        PathBounds(2.0, 1.0, 0.1)


def test_degenerate_during_propagation():
    # the tangent speed vanishes at the end of this path
    p = BernsteinPath(np.array([[0, 0, 0.0], [10, 0, 0], [10, 0, 0]]), 10.0, min_speed_floor=1e-3)
    with pytest.raises(DegeneratePath):
        propagate_frame(p, initial_frame(p), 10.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), deg=st.integers(2, 12),
       span=st.floats(0.05, 1.0))
def test_transport_backends_agree_bitwise(seed, deg, span):
    rng = np.random.default_rng(seed)
    p = random_path(rng, deg)
    f = initial_frame(p)
    out = []
    for fn in (kernels.transport, kernels.transport_py):
        t2, t3 = f.t2.copy(), f.t3.copy()
        st_ = fn(p._hodographs[1], p._hodographs[2], p.final_time, 0.0, span * p.final_time,
                 200, t2, t3, 1e-9)
        out.append((st_, t2, t3))
    assert out[0][0] == out[1][0]
    assert np.array_equal(out[0][1], out[1][1]) and np.array_equal(out[0][2], out[1][2])
