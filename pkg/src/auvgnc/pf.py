"""Outer-loop geometric path following: virtual-time rate and pitch/yaw-rate commands."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .path import BernsteinPath, DegeneratePath, TransportFrame, omega_T
from .se3 import vee

PI_R = np.array([[0.0, 1.0, 0.0],
                 [0.0, 0.0, 1.0]])


@dataclass
class FlowState:
    p: np.ndarray          # inertial CG position (z up)
    R_WI: np.ndarray       # columns w1 (velocity), w2, w3
    v: float
    omega_W: np.ndarray = None   # [p, q, r]

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.R_WI = np.asarray(self.R_WI, dtype=float)
        if self.omega_W is None:
            self.omega_W = np.zeros(3)
        self.omega_W = np.asarray(self.omega_W, dtype=float)


@dataclass(frozen=True)
class PFGains:
    k_gamma: float = 1.0
    k_Rtilde: float = 0.1
    d: float = 250.0

    def __post_init__(self):
        if min(self.k_gamma, self.k_Rtilde, self.d) <= 0:
            raise ValueError("path-following gains must be strictly positive")


@dataclass(frozen=True)
class PFParams:
    """Design constants of the convergence result and the command limit."""
    c: float
    c1: float
    lam: float
    delta_lambda: float
    delta_omega: float
    omega_c_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        if self.c1 <= 0 or self.lam <= 0 or self.omega_c_max <= 0:
            raise ValueError("c1, lam and omega_c_max must be positive")
        if not 0 < self.delta_lambda < 1:
            raise ValueError("delta_lambda must lie in (0, 1)")
        if self.delta_omega < 0 or not 0 < self.v_min <= self.v_max:
            raise ValueError("need delta_omega >= 0 and 0 < v_min <= v_max")

    def c_limit(self, k_Rtilde: float, omega_T_max: float, gamma_dot_max: float,
                omega_DT_sup: float) -> float:
        margin = self.omega_c_max - omega_T_max * gamma_dot_max - omega_DT_sup
        return min(1.0 / math.sqrt(2.0), margin / (2.0 * k_Rtilde))

    def lambda_limit(self, d: float) -> float:
        return self.v_min / (self.c1 ** 2 * math.sqrt(d ** 2 + self.c ** 2 * self.c1 ** 2))

    def delta_omega_limit(self) -> float:
        return 2.0 * self.lam * self.delta_lambda * self.c

    def decay_rate(self) -> float:
        return 2.0 * self.lam * (1.0 - self.delta_lambda)

    def ultimate_bound(self) -> float:
        return 0.5 * self.c * self.delta_omega / (self.lam * self.delta_lambda)

    def check(self, gains: PFGains, omega_T_max: float = 0.0, gamma_dot_max: float = 0.0,
              omega_DT_sup: float = 0.0) -> dict:
        c_lim = self.c_limit(gains.k_Rtilde, omega_T_max, gamma_dot_max, omega_DT_sup)
        lam_lim = self.lambda_limit(gains.d)
        dw_lim = self.delta_omega_limit()
        return {
            "c_limit": c_lim, "c_ok": self.c < c_lim,
            "lambda_limit": lam_lim, "lambda_ok": self.lam < lam_lim,
            "delta_omega_limit": dw_lim, "delta_omega_ok": self.delta_omega < dw_lim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PFParams":
        return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__})


@dataclass
class PFError:
    p_T: np.ndarray
    Psi: float
    e_R: np.ndarray
    R_DT: np.ndarray
    R_tilde: np.ndarray
    omega_DT_D: np.ndarray


def position_error(flow: FlowState, frame: TransportFrame, path: BernsteinPath) -> np.ndarray:
    return frame.R_TI.T @ (flow.p - path.eval(frame.gamma))


def _b1_b2(y, z, d):
    n1 = math.sqrt(d * d + y * y + z * z)
    n2 = math.sqrt(d * d + y * y)
    return np.array([d, -y, -z]) / n1, np.array([y, d, 0.0]) / n2, n1, n2


def desired_frame(p_T, d: float) -> np.ndarray:
    """R_D^T in closed form; depends on the cross-track error only."""
    y, z = float(p_T[1]), float(p_T[2])
    n1 = math.sqrt(d * d + y * y + z * z)
    n2 = math.sqrt(d * d + y * y)
    return np.array([
        [d / n1, y / n2, d * z / (n1 * n2)],
        [-y / n1, d / n2, -y * z / (n1 * n2)],
        [-z / n1, 0.0, n2 / n1],
    ])


def attitude_error(R_DT, R_WT):
    """Return (R_tilde, Psi, e_R) for the desired and flow frames seen from T."""
    R_tilde = np.asarray(R_DT).T @ np.asarray(R_WT)
    Psi = 0.5 * (1.0 - R_tilde[0, 0])
    trace_form = 0.5 * np.trace((np.eye(3) - PI_R.T @ PI_R) @ (np.eye(3) - R_tilde))
    if abs(trace_form - Psi) > 1e-12:
        raise ArithmeticError(f"attitude error forms disagree ({Psi} vs {trace_form})")
    e_R = 0.5 * np.array([R_tilde[0, 2], -R_tilde[0, 1]])
    return R_tilde, Psi, e_R


def position_error_rate(p_T, omega_T_vec, R_WT, v: float, pd_speed: float,
                        gamma_dot: float) -> np.ndarray:
    return (-np.cross(omega_T_vec, p_T) + v * np.asarray(R_WT)[:, 0]
            - np.array([pd_speed * gamma_dot, 0.0, 0.0]))


def desired_frame_rate(p_T, p_T_dot, d: float) -> np.ndarray:
    """Time derivative of R_D^T by the chain rule through (y_T, z_T)."""
    y, z = float(p_T[1]), float(p_T[2])
    yd, zd = float(p_T_dot[1]), float(p_T_dot[2])
    b1, b2, n1, n2 = _b1_b2(y, z, d)
    du = np.array([0.0, -yd, -zd])
    db1 = (du - b1 * np.dot(b1, du)) / n1
    dw = np.array([yd, 0.0, 0.0])
    db2 = (dw - b2 * np.dot(b2, dw)) / n2
    db3 = np.cross(db1, b2) + np.cross(b1, db2)
    return np.column_stack((db1, db2, db3))


def omega_DT_D(p_T, p_T_dot, d: float) -> np.ndarray:
    R = desired_frame(p_T, d)
    return vee(R.T @ desired_frame_rate(p_T, p_T_dot, d), tol=1e-8)


def gamma_dot(flow: FlowState, frame: TransportFrame, path: BernsteinPath,
              gains: PFGains, min_speed: float | None = None) -> float:
    d1 = path.derivative(frame.gamma, 1)
    speed = float(np.linalg.norm(d1))
    floor = path.min_speed_floor if min_speed is None else min_speed
    if speed < floor:
        raise DegeneratePath(f"|p_d'| = {speed:.3e} at gamma={frame.gamma}")
    t1 = d1 / speed
    w1 = flow.R_WI[:, 0]
    return float(np.dot(flow.v * w1 + gains.k_gamma * (flow.p - path.eval(frame.gamma)), t1) / speed)


def path_errors(flow: FlowState, frame: TransportFrame, path: BernsteinPath,
                gains: PFGains, gdot: float) -> PFError:
    p_T = position_error(flow, frame, path)
    R_WT = frame.R_TI.T @ flow.R_WI
    R_DT = desired_frame(p_T, gains.d)
    R_tilde, Psi, e_R = attitude_error(R_DT, R_WT)
    speed = float(np.linalg.norm(path.derivative(frame.gamma, 1)))
    p_T_dot = position_error_rate(p_T, omega_T(frame, gdot), R_WT, flow.v, speed, gdot)
    return PFError(p_T, Psi, e_R, R_DT, R_tilde, omega_DT_D(p_T, p_T_dot, gains.d))


def omega_command(err: PFError, frame: TransportFrame, gamma_dot: float,
                  gains: PFGains) -> np.ndarray:
    ff = err.R_DT.T @ omega_T(frame, gamma_dot) + err.omega_DT_D
    return PI_R @ (err.R_tilde.T @ ff) - 2.0 * gains.k_Rtilde * err.e_R


def lyapunov_value(err: PFError, c1: float) -> float:
    return float(err.Psi + np.dot(err.p_T, err.p_T) / c1 ** 2)


def in_domain(V: float, c: float) -> bool:
    return V <= c * c


def saturate_command(omega_c, omega_c_max: float) -> tuple[np.ndarray, bool]:
    """Scale the 2-vector back onto the norm ball, keeping its direction."""
    nrm = float(np.linalg.norm(omega_c))
    if nrm > omega_c_max:
        return np.asarray(omega_c) * (omega_c_max / nrm), True
    return np.asarray(omega_c, dtype=float), False


@dataclass
class PFOutput:
    gamma_dot: float
    omega_c: np.ndarray
    omega_c_raw: np.ndarray
    err: PFError
    V: float
    in_domain: bool
    saturated: bool
    path_complete: bool


class PathFollower:
    """Evaluates the virtual-time and rate-command laws for one vehicle.

    Stateless apart from the bookkeeping of saturation events; the transport
    frame is supplied by the caller so it can be propagated incrementally.
    """

    def __init__(self, path: BernsteinPath, gains: PFGains, params: PFParams | None = None,
                 min_speed: float | None = None):
        self.path = path
        self.gains = gains
        self.params = params
        self.min_speed = min_speed
        self.saturation_events = 0

    def step(self, flow: FlowState, frame: TransportFrame) -> PFOutput:
        complete = frame.gamma >= self.path.final_time
        gdot = 0.0 if complete else gamma_dot(flow, frame, self.path, self.gains, self.min_speed)
        err = path_errors(flow, frame, self.path, self.gains, gdot)
        raw = np.zeros(2) if complete else omega_command(err, frame, gdot, self.gains)
        sat = False
        cmd = raw
        if self.params is not None:
            cmd, sat = saturate_command(raw, self.params.omega_c_max)
            self.saturation_events += int(sat)
        c1 = self.params.c1 if self.params else 1.0
        V = lyapunov_value(err, c1)
        inside = in_domain(V, self.params.c) if self.params else True
        return PFOutput(gdot, cmd, raw, err, V, inside, sat, complete)
