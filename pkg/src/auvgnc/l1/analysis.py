"""Numerical verification tools for the L1 inner loop.

Builds the closed-loop transfer functions used by the stability conditions,
evaluates their L1 norms, and simulates the non-implementable reference
system next to the sampled-data controller so that the gap between the two
can be measured.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import signal

from ..lti import LtiSystem, NotHurwitz, identity, inf_norm, l1_norm, zoh
from .controller import DesiredSystem, L1Controller, NonProperFilter

SHIFT = 1.0  # M^{-1}(s) = W(s) (s + SHIFT)


class MismatchedRuns(ValueError):
    pass


def stabilizing_gain(A_p, B_p, slow: float = 0.05) -> np.ndarray:
    """State feedback moving every pole with Re > -slow to the left of -slow."""
    A_p, B_p = np.atleast_2d(A_p), np.atleast_2d(B_p)
    lam = np.linalg.eigvals(A_p)
    if np.all(lam.real < -slow):
        return np.zeros((B_p.shape[1], A_p.shape[0]))
    target = lam.astype(complex)
    k = 0
    for i, l in enumerate(lam):
        if l.real >= -slow:
            k += 1
            target[i] = complex(-slow * (1.0 + 0.2 * k), l.imag)
    if not np.any(target.imag):
        target = target.real
    return signal.place_poles(A_p, B_p, target).gain_matrix


def _F_delta(form, delta: float) -> float:
    if callable(form):
        return float(form(delta))
    if isinstance(form, dict):
        return float(form.get("a", 0.0)) + float(form.get("b", 0.0)) * delta
    return float(form)


@dataclass
class StabilityReport:
    G_L1_norm: float
    rho_r: float
    rho_1: float
    rho_2: float
    L_rho_r: float
    L0: float
    F_delta: float
    M_omega: float
    rho_0: float
    gamma_bar_1: float
    cond1_pass: bool
    cond2_pass: bool
    cond3_pass: bool
    margin: float
    rho_ur: float = math.nan
    K: list = field(default_factory=list)
    H1_poles_max_real: float = math.nan

    def to_json(self) -> dict:
        d = asdict(self)
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in d.items()}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


@dataclass(frozen=True)
class AnalysisSystems:
    """Realisations of the transfer functions used by the stability conditions."""
    P: LtiSystem
    H0: LtiSystem
    MinvP: LtiSystem
    H1: LtiSystem
    H2: LtiSystem
    H3: LtiSystem
    H4: LtiSystem
    H5: LtiSystem
    G: LtiSystem
    H_in: LtiSystem
    CW: LtiSystem


def build_analysis_systems(plant: LtiSystem, K, desired: DesiredSystem,
                           C_tf: LtiSystem) -> AnalysisSystems:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    A_k = plant.A - plant.B @ K
    n_p = plant.n
    H0 = LtiSystem(A_k, plant.B, np.eye(n_p))
    P = LtiSystem(A_k, plant.B, plant.C)
    W = desired.inverse_factor(SHIFT)
    MinvP = W @ P.times_s(SHIFT)
    I2 = identity(2)
    E = MinvP - I2
    H1 = (I2 + E @ C_tf).inverse()
    H2 = H0 - H0 @ C_tf @ H1 @ E
    H3 = H1 @ MinvP
    H4 = H1 @ E
    H5 = (H0 @ C_tf @ H1 @ W).times_s(SHIFT)
    G = H0 - H5 @ P
    m = desired.sys
    H_in = (LtiSystem(A_k, np.eye(n_p), plant.C)
            - LtiSystem(m.A, desired.C_pinv @ plant.C, m.C))
    return AnalysisSystems(P, H0, MinvP, H1, H2, H3, H4, H5, G, H_in, C_tf @ W)


def _norm(sys: LtiSystem) -> float:
    try:
        return l1_norm(sys.minreal())
    except NotHurwitz:
        return math.inf


def stability_check(plant: LtiSystem, K, desired: DesiredSystem, C_tf: LtiSystem,
                    bounds: dict) -> StabilityReport:
    """Evaluate the three design conditions and the reference-system bounds.

    ``bounds`` holds rho_0, M_omega, L0, F_delta (constant, {"a", "b"} affine
    in delta, or a callable) and gamma_bar_1.  The rho_r search runs over a
    50-point log grid on (rho_0, 1e6 rho_0] and keeps the best margin.
    """
    rho_0 = float(bounds["rho_0"])
    M_omega = float(bounds["M_omega"])
    L0 = float(bounds.get("L0", 0.0))
    g1 = float(bounds.get("gamma_bar_1", 1e-3))
    F_form = bounds.get("F_delta", 0.0)
    if K is None:
        K = stabilizing_gain(plant.A, plant.B)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if not np.all(np.linalg.eigvals(plant.A - plant.B @ K).real < 0):
        raise NotHurwitz("A_p - B_p K must be Hurwitz")
    S = build_analysis_systems(plant, K, desired, C_tf)
    cond1 = S.H1.is_stable()
    h1_max = float(np.max(S.H1.poles().real)) if S.H1.n else -math.inf
    cond2 = bool(np.all(S.CW.D == 0))
    if not cond1:
        return StabilityReport(math.inf, math.nan, math.inf, math.inf, math.nan, L0,
                               math.nan, M_omega, rho_0, g1, False, cond2, False,
                               -math.inf, math.inf, K.tolist(), h1_max)
    n_p = plant.n
    A_k = plant.A - plant.B @ K
    s_res = LtiSystem(A_k, A_k, np.eye(n_p), np.eye(n_p))   # s (sI - A_k)^{-1}
    rho1_sys = s_res - (S.H5 @ S.H_in).times_s(0.0)
    G_norm = _norm(S.G)
    rho1 = _norm(rho1_sys) * rho_0
    rho2 = _norm(S.H2.postmul(desired.K_g)) * M_omega
    Kinf = inf_norm(K)

    best = (-math.inf, math.nan, math.nan, math.nan)
    for rho_r in np.geomspace(rho_0, 1e6 * rho_0, 51)[1:]:
        F = _F_delta(F_form, rho_r + g1)
        L = (g1 + rho_r) / rho_r * (F + Kinf)
        num = rho_r - rho1 - rho2
        den = L * rho_r + L0
        rhs = num / den if den > 0 else (math.inf if num > 0 else -math.inf)
        margin = rhs - G_norm
        if margin > best[0]:
            best = (margin, rho_r, L, F)
    margin, rho_r, L, F = best
    cond3 = bool(margin > 0)

    rho_ur = math.nan
    if math.isfinite(rho_r):
        CH3 = _norm(C_tf @ S.H3)
        W = desired.inverse_factor(SHIFT)
        s_term = (C_tf @ S.H1 @ W @ S.H_in.times_s(SHIFT)).times_s(0.0)
        last = (identity(2) - C_tf @ S.H4).postmul(desired.K_g)
        rho_ur = CH3 * (L * rho_r + L0) + _norm(s_term) * rho_0 + _norm(last) * M_omega
    return StabilityReport(G_norm, float(rho_r), rho1, rho2, float(L), L0, float(F), M_omega,
                           rho_0, g1, bool(cond1), cond2, cond3, float(margin), rho_ur,
                           K.tolist(), h1_max)


# -- time-domain simulation --------------------------------------------------

Uncertainty = Callable[[float, np.ndarray], np.ndarray]
Signal = Callable[[float], np.ndarray]


def _zero_f(t, x):
    return np.zeros(2)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    dt: float
    x0: np.ndarray
    label: str = ""

    def __len__(self):
        return len(self.t)


def _rk4(f, t, x, dt):
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def reference_system_sim(plant: LtiSystem, f: Uncertainty | None, desired: DesiredSystem,
                         C_tf: LtiSystem, omega_c: Signal, x0, dt: float,
                         T: float) -> Trajectory:
    """Simulate the reference closed loop, which feeds the true uncertainty
    through the low-pass filter.

    The uncertainty estimate sigma_ref is the signal that makes the desired
    model M(s) (started at C_m^+ y0) reproduce the plant output exactly; it
    is recovered algebraically from the output derivative at every stage.
    """
    if np.any(C_tf.D != 0):
        raise NonProperFilter("C(s) must be strictly proper")
    f = f or _zero_f
    A_p, B_p, C_p = plant.A, plant.B, plant.C
    m = desired.sys
    A_m, B_m, C_m = m.A, m.B, m.C
    CB_inv = np.linalg.inv(C_m @ B_m)
    K_g = desired.K_g
    n_p, n_m, n_c = plant.n, m.n, C_tf.n
    x0 = np.asarray(x0, dtype=float)

    def parts(t, z):
        x, xm, xc = z[:n_p], z[n_p:n_p + n_m], z[n_p + n_m:]
        u = K_g @ np.asarray(omega_c(t), dtype=float) - C_tf.C @ xc
        xdot = A_p @ x + B_p @ (u + f(t, x))
        sigma = CB_inv @ (C_p @ xdot - C_m @ A_m @ xm) - u
        return x, xm, xc, u, xdot, sigma

    def rhs(t, z):
        x, xm, xc, u, xdot, sigma = parts(t, z)
        return np.concatenate((xdot, A_m @ xm + B_m @ (u + sigma), C_tf.A @ xc + C_tf.B @ sigma))

    z = np.concatenate((x0, desired.C_pinv @ (C_p @ x0), np.zeros(n_c)))
    N = int(round(T / dt))
    ts = np.arange(N + 1) * dt
    X = np.empty((N + 1, n_p))
    U = np.empty((N + 1, plant.m))
    for k, t in enumerate(ts):
        X[k] = z[:n_p]
        U[k] = parts(t, z)[3]
        if k < N:
            z = _rk4(rhs, t, z, dt)
    return Trajectory(ts, X, U, X @ C_p.T, dt, x0, "reference")


def simulate_sampled_l1(plant: LtiSystem, f: Uncertainty | None, desired: DesiredSystem,
                        C_tf: LtiSystem, omega_c: Signal, x0, dt: float, T: float,
                        Ts: float, Q=None) -> Trajectory:
    """Sampled-data controller on an LTI plant: zero-order hold at Ts, RK4 at dt."""
    f = f or _zero_f
    ratio = Ts / dt
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ValueError("Ts must be an integer multiple of dt")
    ratio = int(round(ratio))
    ctrl = L1Controller(desired, C_tf, Ts, Q)
    A_p, B_p, C_p = plant.A, plant.B, plant.C
    x = np.asarray(x0, dtype=float).copy()
    ctrl.reset(C_p @ x)
    N = int(round(T / dt))
    ts = np.arange(N + 1) * dt
    X = np.empty((N + 1, plant.n))
    U = np.empty((N + 1, plant.m))
    u = np.zeros(plant.m)
    for k, t in enumerate(ts):
        if k % ratio == 0:
            u = ctrl.tick(C_p @ x, np.asarray(omega_c(t), dtype=float))
        X[k], U[k] = x, u
        if k < N:
            x = _rk4(lambda tt, xx: A_p @ xx + B_p @ (u + f(tt, xx)), t, x, dt)
    return Trajectory(ts, X, U, X @ C_p.T, dt, np.asarray(x0, dtype=float), f"L1 Ts={Ts}")


def sampling_gap(closed_loop_run: Trajectory, reference_run: Trajectory) -> tuple[float, float]:
    """Sup-norm state and control gaps between a sampled run and the reference run."""
    a, b = closed_loop_run, reference_run
    if (a.x.shape != b.x.shape or a.u.shape != b.u.shape or a.dt != b.dt
            or not np.allclose(a.t, b.t) or not np.allclose(a.x0, b.x0)):
        raise MismatchedRuns("runs must share time grid, dimensions and initial state")
    return float(np.max(np.abs(a.x - b.x))), float(np.max(np.abs(a.u - b.u)))
