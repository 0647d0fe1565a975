"""Bernstein-polynomial paths and the parallel-transport frame along them.

The path is parameterised by virtual time ``gamma`` in ``[0, final_time]``.
Bending coefficients ``k1``/``k2`` are expressed per unit of ``gamma``, so the
geometric curvature is ``sqrt(k1**2 + k2**2) / |p_d'(gamma)|``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import kernels
from .se3 import ORTHO_TOL

WORLD_DOWN = np.array([0.0, 0.0, -1.0])   # inertial z points up; depth = -z
WORLD_Y = np.array([0.0, 1.0, 0.0])
SUBSTEP_FRACTION = 1e-3                    # frame RK4 substep, fraction of T_f
DEFAULT_GRID = 1000


class GammaOutOfRange(ValueError):
    pass


class DegeneratePath(ValueError):
    pass


def _de_casteljau(ctrl: np.ndarray, s: float) -> np.ndarray:
    pts = np.array(ctrl, dtype=float, copy=True)
    n = pts.shape[0]
    for r in range(1, n):
        pts[: n - r] = (1.0 - s) * pts[: n - r] + s * pts[1 : n - r + 1]
    return pts[0]


@dataclass(frozen=True)
class BernsteinPath:
    control_points: np.ndarray
    final_time: float
    min_speed_floor: float = 1e-9   # DegeneratePath threshold when no bounds are given
    _hodographs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=float)
        if cp.ndim != 2 or cp.shape[1] != 3 or cp.shape[0] < 2:
            raise ValueError("control_points must be an (N+1, 3) array with N >= 1")
        if not np.all(np.isfinite(cp)):
            raise ValueError("control_points must be finite")
        if not (self.final_time > 0 and math.isfinite(self.final_time)):
            raise ValueError("final_time must be positive")
        cp.setflags(write=False)
        object.__setattr__(self, "control_points", cp)
        n = cp.shape[0] - 1
        d1 = n * np.diff(cp, axis=0) / self.final_time
        d2 = (n - 1) * np.diff(d1, axis=0) / self.final_time if n >= 2 else np.zeros((1, 3))
        d3 = (n - 2) * np.diff(d2, axis=0) / self.final_time if n >= 3 else np.zeros((1, 3))
        object.__setattr__(self, "_hodographs", (cp, d1, d2, d3))

    @property
    def degree(self) -> int:
        return self.control_points.shape[0] - 1

    @property
    def hodograph(self) -> np.ndarray:
        """Control points of d p_d / d gamma."""
        return self._hodographs[1]

    def _check(self, gamma: float) -> float:
        g = float(gamma)
        tol = 1e-12 * self.final_time
        if not (-tol <= g <= self.final_time + tol):
            raise GammaOutOfRange(f"gamma={g} outside [0, {self.final_time}]")
        return min(max(g, 0.0), self.final_time)

    def eval(self, gamma: float) -> np.ndarray:
        g = self._check(gamma)
        return _de_casteljau(self.control_points, g / self.final_time)

    def derivative(self, gamma: float, order: int = 1) -> np.ndarray:
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        g = self._check(gamma)
        return _de_casteljau(self._hodographs[order], g / self.final_time)

    def tangent(self, gamma: float) -> np.ndarray:
        d = self.derivative(gamma, 1)
        nrm = np.linalg.norm(d)
        if nrm < self.min_speed_floor:
            raise DegeneratePath(f"|p_d'| = {nrm:.3e} at gamma={gamma}")
        return d / nrm

    def tangent_rate(self, gamma: float) -> np.ndarray:
        """d t1 / d gamma from the analytic first and second derivatives."""
        d1 = self.derivative(gamma, 1)
        d2 = self.derivative(gamma, 2)
        nrm = np.linalg.norm(d1)
        if nrm < self.min_speed_floor:
            raise DegeneratePath(f"|p_d'| = {nrm:.3e} at gamma={gamma}")
        t1 = d1 / nrm
        return (d2 - t1 * np.dot(t1, d2)) / nrm

    def to_json(self) -> dict:
        return {"degree": self.degree, "final_time": self.final_time,
                "control_points": self.control_points.tolist()}

    @classmethod
    def from_json(cls, data: dict, grid: int = DEFAULT_GRID) -> "BernsteinPath":
        try:
            cp = data["control_points"]
            tf = float(data["final_time"])
        except KeyError as exc:
            raise ValueError(f"path file missing field {exc}") from None
        path = cls(np.asarray(cp, dtype=float), tf)
        if "degree" in data and int(data["degree"]) != path.degree:
            raise ValueError(f"degree {data['degree']} does not match {len(cp)} control points")
        speeds = [np.linalg.norm(path.derivative(g)) for g in np.linspace(0, tf, grid + 1)]
        if min(speeds) <= 0.0:
            raise DegeneratePath("path has a stationary point")
        return path

    @classmethod
    def load(cls, fname) -> "BernsteinPath":
        return cls.from_json(json.loads(Path(fname).read_text()))


@dataclass(frozen=True)
class TransportFrame:
    gamma: float
    R_TI: np.ndarray     # columns t1, t2, t3
    k1: float
    k2: float

    @property
    def t1(self):
        return self.R_TI[:, 0]

    @property
    def t2(self):
        return self.R_TI[:, 1]

    @property
    def t3(self):
        return self.R_TI[:, 2]


@dataclass(frozen=True)
class PathBounds:
    v_T_min: float
    v_T_max: float
    omega_T_max: float

    def __post_init__(self):
        if not (0 < self.v_T_min <= self.v_T_max and self.omega_T_max > 0):
            raise ValueError("need 0 < v_T_min <= v_T_max and omega_T_max > 0")

    @classmethod
    def load(cls, fname) -> "PathBounds":
        d = json.loads(Path(fname).read_text())
        return cls(float(d["v_T_min"]), float(d["v_T_max"]), float(d["omega_T_max"]))


def _bending(path: BernsteinPath, gamma: float, t2, t3) -> tuple[float, float]:
    dt1 = path.tangent_rate(gamma)
    return float(np.dot(t2, dt1)), float(np.dot(t3, dt1))


def _complete(t1, t2):
    t2 = t2 - np.dot(t1, t2) * t1
    t2 = t2 / np.linalg.norm(t2)
    return np.column_stack((t1, t2, np.cross(t1, t2)))


def initial_frame(path: BernsteinPath, gamma: float = 0.0) -> TransportFrame:
    """Frame at ``gamma`` with t2 along the world-down direction projected off t1.

    Falls back to world-y when the tangent is within 1e-6 of vertical.
    """
    t1 = path.tangent(gamma)
    ref = WORLD_DOWN if np.linalg.norm(np.cross(t1, WORLD_DOWN)) > 1e-6 else WORLD_Y
    R = _complete(t1, ref)
    k1, k2 = _bending(path, gamma, R[:, 1], R[:, 2])
    return TransportFrame(path._check(gamma), R, k1, k2)


def propagate_frame(path: BernsteinPath, frame: TransportFrame, gamma_next: float,
                    min_speed: float | None = None) -> TransportFrame:
    """Carry the normals from ``frame.gamma`` to ``gamma_next`` (either direction).

    Fixed-substep RK4 on t2' = -k1 t1, t3' = -k2 t1 with the bending
    coefficients re-evaluated from the analytic tangent rate; t1 comes from the
    analytic tangent after every substep and the normals are re-orthonormalised.
    """
    g_end = path._check(gamma_next)
    g = frame.gamma
    span = g_end - g
    if not span:
        return frame
    floor = path.min_speed_floor if min_speed is None else min_speed
    n = max(1, math.ceil(abs(span) / (SUBSTEP_FRACTION * path.final_time) - 1e-9))
    t2, t3 = frame.t2.copy(), frame.t3.copy()
    status, g_bad = kernels.transport(path._hodographs[1], path._hodographs[2],
                                      path.final_time, g, g_end, n, t2, t3, floor)
    if status == 2:
        raise DegeneratePath(f"|p_d'| < {floor} at gamma={g_bad}")
    if status == 3:
        raise DegeneratePath(f"transport frame flipped during propagation near gamma={g_bad}")
    R = _complete(path.tangent(g_end), t2)
    k1, k2 = _bending(path, g_end, R[:, 1], R[:, 2])
    return TransportFrame(g_end, R, k1, k2)


def frame_at(path: BernsteinPath, gamma: float) -> TransportFrame:
    return propagate_frame(path, initial_frame(path), gamma)


class CurvatureTorsion(NamedTuple):
    kappa: float
    tau: float
    torsion_defined: bool


def curvature_torsion(path: BernsteinPath, frame: TransportFrame,
                      h: float = 1e-4) -> CurvatureTorsion:
    """Curvature sqrt(k1^2+k2^2) and torsion -d/dgamma atan2(k2, k1).

    On a straight stretch (k1 = k2 = 0) the torsion is reported as 0 with
    ``torsion_defined`` False.
    """
    kappa = math.hypot(frame.k1, frame.k2)
    if kappa < 1e-12:
        return CurvatureTorsion(kappa, 0.0, False)
    lo = max(frame.gamma - h, 0.0)
    hi = min(frame.gamma + h, path.final_time)
    f_lo = propagate_frame(path, frame, lo)
    f_hi = propagate_frame(path, frame, hi)
    angles = np.unwrap([math.atan2(f_lo.k2, f_lo.k1), math.atan2(frame.k2, frame.k1),
                        math.atan2(f_hi.k2, f_hi.k1)])
    if math.hypot(f_lo.k1, f_lo.k2) < 1e-12 or math.hypot(f_hi.k1, f_hi.k2) < 1e-12:
        return CurvatureTorsion(kappa, 0.0, False)
    tau = -(angles[2] - angles[0]) / (hi - lo)
    return CurvatureTorsion(kappa, float(tau), True)


def omega_T(frame: TransportFrame, gamma_dot: float) -> np.ndarray:
    return np.array([0.0, -frame.k2 * gamma_dot, frame.k1 * gamma_dot])


@dataclass
class BoundsReport:
    v_min: float
    v_max: float
    omega_max: float
    samples: int
    speed_ok: bool
    rate_ok: bool

    @property
    def passed(self) -> bool:
        return self.speed_ok and self.rate_ok

    def to_json(self) -> dict:
        return {"v_min": self.v_min, "v_max": self.v_max, "omega_max": self.omega_max,
                "samples": self.samples, "speed_ok": self.speed_ok,
                "rate_ok": self.rate_ok, "passed": self.passed}


def bending_magnitude(path: BernsteinPath, gamma: float) -> float:
    """sqrt(k1^2 + k2^2) = |d t1/d gamma|, independent of the normal choice."""
    return float(np.linalg.norm(path.tangent_rate(gamma)))


def validate_bounds(path: BernsteinPath, bounds: PathBounds,
                    samples: int = DEFAULT_GRID) -> BoundsReport:
    samples = max(int(samples), DEFAULT_GRID)
    gs = np.linspace(0.0, path.final_time, samples)
    speeds = np.array([np.linalg.norm(path.derivative(g)) for g in gs])
    if speeds.min() <= 0:
        rates = np.array([np.inf])
    else:
        rates = np.array([bending_magnitude(path, g) for g in gs])
    return BoundsReport(
        v_min=float(speeds.min()), v_max=float(speeds.max()),
        omega_max=float(rates.max()), samples=samples,
        speed_ok=bool(speeds.min() >= bounds.v_T_min and speeds.max() <= bounds.v_T_max),
        rate_ok=bool(rates.max() <= bounds.omega_T_max),
    )


def is_frame_orthonormal(frame: TransportFrame, tol: float = ORTHO_TOL) -> bool:
    R = frame.R_TI
    return np.linalg.norm(R.T @ R - np.eye(3)) <= tol
