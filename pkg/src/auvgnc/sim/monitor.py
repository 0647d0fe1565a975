"""Runtime checks of the path-following convergence envelope."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..pf import PFGains, PFParams


@dataclass
class BoundReport:
    passed: bool
    violations: int
    first_violation_t: float | None
    V0: float
    decay_rate: float
    ultimate_bound: float
    crossover_t: float | None       # where the exponential envelope meets the ultimate bound
    T_b_empirical: float | None     # after this time V stays within the ultimate bound
    max_excess: float
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        return d


def envelope(t, V0: float, params: PFParams) -> np.ndarray:
    """Exponential envelope until it meets the ultimate bound, then the bound."""
    t = np.asarray(t, dtype=float)
    return np.maximum(V0 * np.exp(-params.decay_rate() * t), params.ultimate_bound())


def settle_time(t, x, bound: float) -> float | None:
    """First time after which |x| stays at or below bound; None if it never settles."""
    t, x = np.asarray(t), np.abs(np.asarray(x))
    if x.size == 0 or x[-1] > bound:
        return None
    above = np.nonzero(x > bound)[0]
    return float(t[0]) if above.size == 0 else float(t[min(above[-1] + 1, t.size - 1)])


def bound_monitor(t, V, params: PFParams, tol: float = 1e-6, *, gains: PFGains | None = None,
                  gamma_dot=None, omega_T_norm=None, omega_DT_norm=None,
                  inner_error=None) -> BoundReport:
    """Check V(t) against the exponential envelope and the ultimate bound.

    The optional signals provide the empirical suprema used to re-check the
    parameter constraints (command margin for c, speed bound for lambda, and
    inner-loop tracking error against the admissible delta_omega).
    """
    t = np.asarray(t, dtype=float)
    V = np.asarray(V, dtype=float)
    rate = params.decay_rate()
    UB = params.ultimate_bound()
    if V.size == 0:
        return BoundReport(True, 0, None, math.nan, rate, UB, None, None, 0.0)
    V0 = float(V[0])
    tr = t - t[0]
    env = envelope(tr, V0, params)
    excess = V - env
    bad = np.nonzero(excess > tol)[0]
    cross = None
    if UB > 0 and V0 > UB:
        cross = float(t[0] + math.log(V0 / UB) / rate)
    elif V0 <= UB:
        cross = float(t[0])
    checks = {}
    if gains is not None:
        wT = float(np.max(omega_T_norm)) if omega_T_norm is not None and len(omega_T_norm) else 0.0
        wDT = float(np.max(omega_DT_norm)) if omega_DT_norm is not None and len(omega_DT_norm) else 0.0
        c_lim = params.c_limit(gains.k_Rtilde, wT, 1.0, wDT)
        checks["c_limit_empirical"] = c_lim
        checks["c_ok"] = bool(params.c < c_lim)
        lam_lim = params.lambda_limit(gains.d)
        checks["lambda_limit"] = lam_lim
        checks["lambda_ok"] = bool(params.lam < lam_lim)
        dw_lim = params.delta_omega_limit()
        checks["delta_omega_limit"] = dw_lim
        checks["delta_omega_ok"] = bool(params.delta_omega < dw_lim)
        if inner_error is not None and len(inner_error):
            meas = float(np.max(inner_error))
            checks["delta_omega_measured"] = meas
            checks["delta_omega_measured_ok"] = bool(meas < dw_lim)
        if gamma_dot is not None and len(gamma_dot):
            checks["gamma_dot_max"] = float(np.max(np.abs(gamma_dot)))
    return BoundReport(
        passed=bad.size == 0,
        violations=int(bad.size),
        first_violation_t=float(t[bad[0]]) if bad.size else None,
        V0=V0,
        decay_rate=rate,
        ultimate_bound=UB,
        crossover_t=cross,
        T_b_empirical=settle_time(t, V, UB) if UB > 0 else None,
        max_excess=float(max(np.max(excess), 0.0)),
        checks=checks,
    )


def check_log(log, params: PFParams, gains: PFGains | None = None, tol: float = 1e-6,
              active_only: bool = True) -> BoundReport:
    """Run the monitor on a telemetry table (see ``runlog.COLUMNS``).

    Rows after the path end are dropped unless ``active_only`` is false.
    """
    t = log["t"]
    keep = np.ones(t.size, dtype=bool)
    if active_only and t.size:
        # the runner freezes gamma and zeroes its rate once the path is complete
        done = np.nonzero((log["gamma_dot"] == 0.0) & (log["gamma"] > log["gamma"][0]))[0]
        if done.size:
            keep[done[0] + 1:] = False
    inner = np.hypot(log["q_c"] - log["q"], log["r_c"] - log["r"])[keep]
    return bound_monitor(t[keep], log["V"][keep], params, tol, gains=gains,
                         gamma_dot=log["gamma_dot"][keep], omega_T_norm=log["omega_T_norm"][keep],
                         omega_DT_norm=log["omega_DT_norm"][keep], inner_error=inner)
