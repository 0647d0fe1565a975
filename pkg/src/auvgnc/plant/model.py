"""Surrogate vehicle: fin mixing, PI autopilot, suction profile and one-step plant update."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lti import LtiSystem
from ..pf import FlowState
from ..core import _kernels_py as _k
from ..core.kernels import NCOL, advance
from .params import Disturbance, PlantParams, kernel_params


def mix_fins(delta_v: float, delta_h: float, delta_max: float = 30.0) -> np.ndarray:
    """Stern-plane x-configuration: five fin angles (deg), each clipped to +-delta_max."""
    return np.array(_k.mix(float(delta_v), float(delta_h), float(delta_max)))


def inverse_mix(fins) -> tuple[float, float]:
    """Least-squares (delta_v, delta_h) reproducing the given fin vector."""
    return _k.unmix([float(f) for f in fins])


def autopilot_step(cmd, meas, integ, dt: float, params: PlantParams,
                   e_prev=None) -> tuple[float, float, np.ndarray, np.ndarray]:
    """One PI update. Returns (delta_v, delta_h, integ_next, e_now).

    ``e_prev`` is the previous error (for trapezoidal integration); None
    means zero.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    ep = np.zeros(2) if e_prev is None else np.asarray(e_prev, dtype=float)
    ap = [float(integ[0]), float(integ[1]), float(ep[0]), float(ep[1])]
    dv, dh = _k.autopilot(float(cmd[0]), float(cmd[1]), float(meas[0]), float(meas[1]), ap,
                          dt, params.K_Pv, params.K_Ph, params.K_Iv, params.K_Ih,
                          params.delta_max)
    return dv, dh, np.array(ap[:2]), np.array(ap[2:])


def suction_force(depth: float, params: PlantParams | None = None) -> float:
    """Near-surface hull force (kN); constant at and above depth_ref, decaying below."""
    p = params or PlantParams()
    if depth <= 0:
        raise ValueError("depth must be positive")
    return _k.suction(float(depth), p.F0, p.depth_ref, p.depth_scale)


@dataclass
class VehicleState:
    flow: FlowState
    fin_angles: np.ndarray = field(default_factory=lambda: np.zeros(5))
    autopilot_integrators: np.ndarray = field(default_factory=lambda: np.zeros(2))
    autopilot_prev_error: np.ndarray = field(default_factory=lambda: np.zeros(2))
    t: float = 0.0

    @property
    def depth(self) -> float:
        return -float(self.flow.p[2])

    def kernel_state(self, gamma: float = 0.0) -> np.ndarray:
        w = self.flow.omega_W
        return np.concatenate((self.flow.p, self.flow.R_WI.reshape(-1), [w[1], w[2], gamma]))

    def autopilot_vector(self) -> np.ndarray:
        return np.concatenate((self.autopilot_integrators, self.autopilot_prev_error))


def state_from_kernel(x, ap, v: float, t: float, fins=None) -> VehicleState:
    flow = FlowState(np.array(x[:3]), np.array(x[3:12]).reshape(3, 3), v,
                     np.array([0.0, x[12], x[13]]))
    return VehicleState(flow, np.zeros(5) if fins is None else np.asarray(fins, dtype=float),
                        np.array(ap[:2]), np.array(ap[2:]), t)


def plant_step(state: VehicleState, cmd, dist: Disturbance | None, dt: float,
               params: PlantParams, nsteps: int = 1) -> VehicleState:
    """Advance the vehicle under a held autopilot rate command (roll suppressed).

    The command passes through the PI autopilot and fin mixing; the rate
    dynamics see the effective deflections recovered by inverse mixing.
    """
    dist = dist or Disturbance()
    x = state.kernel_state()
    ap = state.autopilot_vector()
    prm = kernel_params(params, dist, state.flow.v)
    out = np.zeros((max(nsteps, 1), NCOL))
    empty = np.zeros((0, 3))
    status = advance(x, ap, np.asarray(cmd, dtype=float), state.t, dt, nsteps, prm, empty,
                     empty, out)
    if status:
        raise FloatingPointError("plant state became non-finite")
    return state_from_kernel(x, ap, state.flow.v, state.t + nsteps * dt, out[nsteps - 1, 6:11])


def linear_model(params: PlantParams, v: float) -> LtiSystem:
    """Autopilot-closed rate loop away from saturation: command (q, r) to measured (q, r).

    States per channel are the rate and the PI integrator.
    """
    A = np.zeros((4, 4))
    B = np.zeros((4, 2))
    C = np.zeros((2, 4))
    for ch, (tau, b, Kp, Ki) in enumerate(((params.tau_q, params.b_q(v), params.K_Pv, params.K_Iv),
                                           (params.tau_r, params.b_r(v), params.K_Ph, params.K_Ih))):
        i = 2 * ch
        A[i, i] = -(1.0 + b * Kp) / tau
        A[i, i + 1] = b * Ki / tau
        A[i + 1, i] = -1.0
        B[i, ch] = b * Kp / tau
        B[i + 1, ch] = 1.0
        C[ch, i] = 1.0
    return LtiSystem(A, B, C)
