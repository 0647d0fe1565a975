"""Closed-loop scenario runner: path -> outer loop -> inner loop -> autopilot -> vehicle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..l1.controller import L1Controller
from ..lti import zoh
from ..path import initial_frame, propagate_frame, validate_bounds
from ..pf import FlowState, PathFollower
from ..core import kernels
from ..plant.params import kernel_params
from ..se3 import rot_axis
from .config import ConfigError, ScenarioConfig
from .metrics import Metrics, overshoot
from .monitor import bound_monitor, settle_time
from .runlog import COLUMNS, RunLog

WORLD_DOWN = np.array([0.0, 0.0, -1.0])

# columns of the per-substep record
D_T, D_PX, D_PY, D_PZ, D_Q, D_R = 0, 1, 2, 3, 4, 5
D_FINS = slice(6, 11)
D_SUCTION, D_GAMMA, D_GDOT = 11, 12, 13


class NumericalDivergence(FloatingPointError):
    def __init__(self, msg: str, last_good_index: int):
        super().__init__(f"{msg} (last good substep {last_good_index})")
        self.last_good_index = last_good_index


@dataclass
class RunResult:
    log: RunLog
    metrics: Metrics
    dense: np.ndarray          # per-substep plant record (see D_* columns)
    q_m: np.ndarray            # desired-model output per substep
    ticks: dict = field(default_factory=dict)   # per-tick outer/inner-loop signals
    config: ScenarioConfig | None = None
    final_state: np.ndarray | None = None       # kernel state at t = n_ticks * Ts


def level_orientation(heading) -> np.ndarray:
    """Flow frame with w1 along heading, w3 toward world-down (roll-free)."""
    w1 = np.asarray(heading, dtype=float)
    w1 = w1 / np.linalg.norm(w1)
    ref = WORLD_DOWN if np.linalg.norm(np.cross(w1, WORLD_DOWN)) > 1e-9 else np.array([0, 1.0, 0])
    w3 = ref - np.dot(ref, w1) * w1
    w3 /= np.linalg.norm(w3)
    return np.column_stack((w1, np.cross(w3, w1), w3))


def initial_state(cfg: ScenarioConfig) -> np.ndarray:
    path = cfg.path
    R = level_orientation(path.tangent(0.0))
    # pitch about w2 (positive nose up), then yaw about w3
    R = R @ rot_axis(1, math.radians(cfg.initial_pitch_deg))
    R = R @ rot_axis(2, math.radians(cfg.initial_yaw_deg))
    p = path.eval(0.0) + cfg.initial_offset
    return np.concatenate((p, R.reshape(-1), [0.0, 0.0, 0.0]))


def run(cfg: ScenarioConfig, check_path: bool = True) -> RunResult:
    """Simulate one scenario deterministically."""
    path = cfg.path
    if check_path and cfg.bounds is not None:
        rep = validate_bounds(path, cfg.bounds)
        if not rep.passed:
            raise ConfigError(f"path violates its declared bounds: {rep.to_json()}")
    v = cfg.speed
    dt, Ts, m = cfg.dt, cfg.Ts, cfg.substeps
    n_ticks = cfg.n_ticks
    n_steps = n_ticks * m

    x = initial_state(cfg)
    ap = np.zeros(4)
    frame = initial_frame(path)
    follower = PathFollower(path, cfg.pf_gains, cfg.pf_params)
    desired = cfg.l1.desired
    K_g = desired.K_g
    A_m, B_m, C_m = desired.sys.A, desired.sys.B, desired.sys.C
    Ad, Bd = zoh(A_m, B_m, dt)
    y0 = x[12:14].copy()
    x_m = desired.C_pinv @ y0
    ctrl = None
    if cfg.adaptation:
        ctrl = L1Controller(desired, cfg.l1.C, Ts, cfg.l1.Q)
        ctrl.reset(y0)
    prm = kernel_params(cfg.plant, cfg.disturbances, v, cfg.pf_gains.k_gamma, path.final_time,
                        path.min_speed_floor)
    cp = np.ascontiguousarray(path.control_points)
    hodo = np.ascontiguousarray(path.hodograph)

    dense = np.zeros((n_steps, kernels.NCOL))
    qm = np.zeros((n_steps, 2))
    tick_names = ("t", "V", "Psi", "pT_norm", "omega_c_norm", "omega_c_raw_norm", "sat",
                  "gamma_dot", "omega_T_norm", "omega_DT_norm", "complete", "inner_err")
    ticks = {k: np.zeros(n_ticks) for k in tick_names}
    rows = []
    log_every = cfg.log_every
    delta_max = cfg.plant.delta_max

    for i in range(n_ticks):
        k0 = i * m
        t = k0 * dt
        g = float(x[14])
        if g != frame.gamma:
            frame = propagate_frame(path, frame, g)
        q, r = float(x[12]), float(x[13])
        flow = FlowState(x[:3].copy(), x[3:12].reshape(3, 3).copy(), v, np.array([0.0, q, r]))
        out = follower.step(flow, frame)
        wc = out.omega_c
        if ctrl is not None:
            u = ctrl.tick(np.array([q, r]), wc, zero_sigma=cfg.l1.zero_sigma)
        else:
            u = wc.copy()
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(wc))):
            raise NumericalDivergence(f"non-finite command at t={t}", max(k0 - 1, 0))
        uc = K_g @ wc
        for k in range(m):
            qm[k0 + k] = C_m @ x_m
            x_m = Ad @ x_m + Bd @ uc
        status = kernels.advance(x, ap, np.ascontiguousarray(u, dtype=float), t, dt, m, prm,
                                 cp, hodo, dense[k0:k0 + m])
        if status:
            bad = np.nonzero(~np.all(np.isfinite(dense[k0:k0 + m]), axis=1))[0]
            raise NumericalDivergence(f"plant diverged near t={t}",
                                      k0 + (int(bad[0]) if bad.size else m) - 1)
        bend = math.hypot(frame.k1, frame.k2)
        wdt = float(np.linalg.norm(out.err.omega_DT_D))
        pT = out.err.p_T
        ticks["t"][i] = t
        ticks["V"][i] = out.V
        ticks["Psi"][i] = out.err.Psi
        ticks["pT_norm"][i] = float(np.linalg.norm(pT))
        ticks["omega_c_norm"][i] = float(np.linalg.norm(wc))
        ticks["omega_c_raw_norm"][i] = float(np.linalg.norm(out.omega_c_raw))
        ticks["sat"][i] = float(out.saturated)
        ticks["gamma_dot"][i] = out.gamma_dot
        ticks["omega_T_norm"][i] = bend * abs(out.gamma_dot)
        ticks["omega_DT_norm"][i] = wdt
        ticks["complete"][i] = float(out.path_complete)
        ticks["inner_err"][i] = math.hypot(wc[0] - q, wc[1] - r)
        if i % log_every == 0:
            row = dense[k0]
            fins = row[D_FINS]
            sig = float(np.linalg.norm(ctrl.state.sigma_hat)) if ctrl is not None else 0.0
            rows.append([
                t, g, out.gamma_dot, row[D_PX], row[D_PY], row[D_PZ], -row[D_PZ],
                pT[0], pT[1], pT[2], out.err.Psi, out.V, float(out.in_domain),
                wc[0], wc[1], qm[k0, 0], qm[k0, 1], q, r, u[0], u[1], sig,
                *fins, row[D_SUCTION], bend * abs(out.gamma_dot), wdt, float(out.saturated),
                float(np.any(np.abs(fins) >= delta_max)),
            ])
    log = RunLog(np.array(rows, dtype=float).reshape(-1, len(COLUMNS)))
    metrics = compute_metrics(cfg, dense, qm, ticks, x)
    return RunResult(log, metrics, dense, qm, ticks, cfg, x.copy())


def _active_count(dense: np.ndarray, T_f: float) -> int:
    """Samples up to and including the first one with the target at the path end."""
    done = np.nonzero(dense[:, D_GAMMA] >= T_f)[0]
    return dense.shape[0] if done.size == 0 else int(done[0]) + 1


def compute_metrics(cfg: ScenarioConfig, dense: np.ndarray, qm: np.ndarray,
                    ticks: dict, x_final: np.ndarray | None = None) -> Metrics:
    """Position metrics use every substep while the path is active; rate-tracking
    metrics use the whole run; outer-loop metrics use every controller tick."""
    path = cfg.path
    p0, pf = path.eval(0.0), path.eval(path.final_time)
    n_act = _active_count(dense, path.final_time)
    act = dense[:n_act]
    depth = -act[:, D_PZ]
    lateral = act[:, D_PY]
    ov_d = overshoot(depth, -p0[2], -pf[2])
    ov_l = overshoot(lateral, p0[1], pf[1])
    if dense.shape[0]:
        eq = float(np.max(np.abs(qm[:, 0] - dense[:, D_Q])))
        er = float(np.max(np.abs(qm[:, 1] - dense[:, D_R])))
    else:
        eq = er = 0.0
    tt = ticks["t"]
    n_tick_act = int(np.sum(ticks["complete"] == 0)) if tt.size else 0
    tt_a = tt[:n_tick_act]
    violations, Tb, mon = 0, None, None
    if cfg.pf_params is not None and tt_a.size:
        mon = bound_monitor(tt_a, ticks["V"][:n_tick_act], cfg.pf_params)
        violations, Tb = mon.violations, mon.T_b_empirical
    ttc = settle_time(tt_a, ticks["pT_norm"][:n_tick_act], cfg.converge_tol) if tt_a.size else None
    extras = {
        "duration": cfg.duration,
        "Ts": cfg.Ts,
        "dt": cfg.dt,
        "speed": cfg.speed,
        "adaptation": cfg.adaptation,
        "kernel_backend": kernels.BACKEND,
        "substeps": int(dense.shape[0]),
        "path_complete_time": float(tt[n_tick_act]) if n_tick_act < tt.size else None,
        "final_depth": None if x_final is None else float(-x_final[2]),
        "final_lateral": None if x_final is None else float(x_final[1]),
        "max_pT_norm": float(np.max(ticks["pT_norm"][:n_tick_act])) if n_tick_act else 0.0,
        "t_max_pT_norm": float(tt[np.argmax(ticks["pT_norm"][:n_tick_act])]) if n_tick_act else None,
        "max_omega_c_norm": float(np.max(ticks["omega_c_norm"])) if tt.size else 0.0,
        "max_omega_c_raw_norm": float(np.max(ticks["omega_c_raw_norm"])) if tt.size else 0.0,
        "t_max_omega_c_norm": float(tt[np.argmax(ticks["omega_c_raw_norm"])]) if tt.size else None,
        "omega_c_saturation_ticks": int(np.sum(ticks["sat"])),
        "max_abs_fin_deg": float(np.max(np.abs(dense[:, D_FINS]))) if dense.shape[0] else 0.0,
        "fin_saturation_fraction": float(np.mean(np.any(np.abs(dense[:, D_FINS])
                                                        >= cfg.plant.delta_max, axis=1)))
        if dense.shape[0] else 0.0,
        "max_suction_kN": float(np.max(dense[:, D_SUCTION])) if dense.shape[0] else 0.0,
        "max_inner_loop_error": float(np.max(ticks["inner_err"])) if tt.size else 0.0,
        "V0": float(ticks["V"][0]) if tt.size else None,
        "envelope_crossover_t": mon.crossover_t if mon else None,
    }
    return Metrics(ov_d, ov_l, eq, er, violations, ttc, Tb, extras)


@dataclass
class SweepRow:
    Ts: float
    dt: float
    max_abs_qm_minus_q: float
    max_abs_rm_minus_r: float


@dataclass
class SweepTable:
    rows: list
    monotone_q: bool | None
    monotone_r: bool | None

    def to_json(self) -> dict:
        return {"rows": [r.__dict__ for r in self.rows], "monotone_q": self.monotone_q,
                "monotone_r": self.monotone_r}


def _nonincreasing(vals, rtol: float = 1e-9) -> bool:
    return all(b <= a * (1 + rtol) + 1e-15 for a, b in zip(vals, vals[1:]))


def sweep_configs(cfg: ScenarioConfig, ts_list) -> list[ScenarioConfig]:
    ts_list = [float(t) for t in ts_list]
    if not ts_list:
        raise ConfigError("empty Ts list")
    if any(b > a for a, b in zip(ts_list, ts_list[1:])):
        raise ConfigError("Ts list must be in descending order")
    return [cfg.with_overrides(Ts=ts, dt=_common_dt(cfg.dt, ts_list)) for ts in ts_list]


def _common_dt(dt_max: float, ts_list, max_div: int = 10000) -> float:
    """Largest step no larger than dt_max or min(Ts)/5 that divides every Ts."""
    ts_min = min(ts_list)
    k = max(5, math.ceil(ts_min / dt_max - 1e-9))
    for div in range(k, max_div + 1):
        dt = ts_min / div
        if all(abs(ts / dt - round(ts / dt)) < 1e-9 for ts in ts_list):
            return dt
    raise ConfigError(f"no common integration step divides all of {ts_list}")


def ts_sweep(cfg: ScenarioConfig, ts_list, jobs: int = 1) -> SweepTable:
    """Re-run a scenario for each sample period with a common integration step."""
    cfgs = sweep_configs(cfg, ts_list)
    if jobs > 1 and len(cfgs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_one, cfgs))
    else:
        results = [_sweep_one(c) for c in cfgs]
    rows = [SweepRow(c.Ts, c.dt, q, r) for c, (q, r) in zip(cfgs, results)]
    if len(rows) == 1:
        return SweepTable(rows, None, None)
    return SweepTable(rows, _nonincreasing([r.max_abs_qm_minus_q for r in rows]),
                      _nonincreasing([r.max_abs_rm_minus_r for r in rows]))


def _sweep_one(cfg: ScenarioConfig) -> tuple[float, float]:
    m = run(cfg).metrics
    return m.max_abs_qm_minus_q, m.max_abs_rm_minus_r
