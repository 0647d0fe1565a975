"""Fixed-size 3x3 helpers: hat/vee maps and rotation-matrix utilities."""
from __future__ import annotations

import numpy as np

ORTHO_TOL = 1e-9
SKEW_TOL = 1e-12


class NonSkewInput(ValueError):
    """Raised when a matrix handed to :func:`vee` is not antisymmetric."""


def hat(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def vee(S, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`hat`.

    The antisymmetry check is relative to the largest entry, so large but
    exactly skew inputs pass while a visibly asymmetric matrix raises.
    """
    S = np.asarray(S, dtype=float)
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S + S.T)) > tol * scale:
        raise NonSkewInput(f"matrix is not skew-symmetric (|S+S^T|={np.max(np.abs(S + S.T)):.3e})")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def trace_identity_check(xi, T) -> tuple[float, float]:
    """Both sides of tr[hat(xi) T] = -xi . vee(T - T^T)."""
    T = np.asarray(T, dtype=float)
    lhs = float(np.trace(hat(xi) @ T))
    rhs = float(-np.dot(np.asarray(xi, dtype=float), vee(T - T.T, tol=np.inf)))
    return lhs, rhs


def orthonormalize(R) -> np.ndarray:
    """Gram-Schmidt on the columns, first column direction kept fixed.

    The third column is rebuilt as the cross product so the result is a
    proper rotation (det = +1).
    """
    R = np.asarray(R, dtype=float)
    c1 = R[:, 0] / np.linalg.norm(R[:, 0])
    c2 = R[:, 1] - np.dot(c1, R[:, 1]) * c1
    c2 /= np.linalg.norm(c2)
    c3 = np.cross(c1, c2)
    return np.column_stack((c1, c2, c3))


def rotation_from_columns(c1, c2) -> np.ndarray:
    """Rotation whose first two columns span (c1, c2), c1 direction exact."""
    return orthonormalize(np.column_stack((c1, c2, np.zeros(3))))


def is_rotation(R, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    return (np.linalg.norm(R.T @ R - np.eye(3)) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def rot_axis(axis: int, angle: float) -> np.ndarray:
    """Elementary rotation about body axis 0, 1 or 2."""
    e = np.zeros(3)
    e[axis] = 1.0
    K = hat(e)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
