import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.transform import Rotation

from auvgnc.se3 import (
    NonSkewInput, hat, is_rotation, orthonormalize, random_rotation, rot_axis,
    rotation_from_columns, trace_identity_check, vee,
)

vec3 = arrays(np.float64, 3, elements=st.floats(-1e3, 1e3, allow_nan=False))


@given(vec3, vec3)
def test_hat_is_cross_product(v, w):
    np.testing.assert_allclose(hat(v) @ w, np.cross(v, w), rtol=1e-12, atol=1e-9)


@given(vec3)
def test_hat_vee_round_trip_exact(v):
    assert np.array_equal(vee(hat(v)), v)
    S = hat(v)
    assert np.array_equal(S, -S.T)


def test_vee_rejects_asymmetric():
    S = hat([1.0, 2.0, 3.0])
    S[0, 1] += 1e-6
    with pytest.raises(NonSkewInput):
        vee(S)


def test_vee_tolerance_is_relative():
    S = hat([1e8, -2e8, 3e8])
    S[0, 1] += 1e-6      # relative error 3e-15 of the largest entry
    vee(S)


def test_trace_identity_against_explicit_sum(rng):
    for _ in range(200):
        xi = rng.normal(size=3)
        T = rng.normal(size=(3, 3))
        lhs, rhs = trace_identity_check(xi, T)
        # independent expansion of tr(hat(xi) T)
        ref = (-xi[2] * T[1, 0] + xi[1] * T[2, 0] + xi[2] * T[0, 1]
               - xi[0] * T[2, 1] - xi[1] * T[0, 2] + xi[0] * T[1, 2])
        assert lhs == pytest.approx(ref, abs=1e-12)
        assert rhs == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("axis", [0, 1, 2])
@given(angle=st.floats(-np.pi, np.pi))
def test_rot_axis_matches_scipy(axis, angle):
    e = np.zeros(3)
    e[axis] = angle
    np.testing.assert_allclose(rot_axis(axis, angle), Rotation.from_rotvec(e).as_matrix(),
                               atol=1e-14)


def test_random_rotation_is_proper(rng):
    for _ in range(50):
        assert is_rotation(random_rotation(rng))


def test_orthonormalize_keeps_first_column(rng):
    R = random_rotation(rng) + 1e-3 * rng.normal(size=(3, 3))
    Q = orthonormalize(R)
    assert is_rotation(Q)
    np.testing.assert_allclose(Q[:, 0], R[:, 0] / np.linalg.norm(R[:, 0]), atol=1e-15)


def test_rotation_from_columns_spans_plane():
    Q = rotation_from_columns([2.0, 0, 0], [1.0, 1.0, 0])
    np.testing.assert_allclose(Q, np.eye(3), atol=1e-15)


def test_is_rotation_rejects_reflection():
    assert not is_rotation(np.diag([1.0, 1.0, -1.0]))


@settings(max_examples=50)
@given(vec3)
def test_rotation_kinematics_sign(v):
    # R hat(w) is tangent to SO(3) at R: R^T (R hat(w)) is skew
    R = Rotation.from_rotvec(np.clip(v, -3, 3)).as_matrix()
    W = R.T @ (R @ hat([0.3, -0.2, 0.1]))
    np.testing.assert_allclose(W, -W.T, atol=1e-14)
