"""Outer loop closed around an ideal inner loop: the vehicle turns exactly at the command.

Used to check the convergence envelope without any inner-loop error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..path import BernsteinPath, TransportFrame, initial_frame, propagate_frame
from ..pf import FlowState, PathFollower, PFGains, PFParams, desired_frame
from ..se3 import hat, orthonormalize
from .monitor import BoundReport, bound_monitor


@dataclass
class KinematicRun:
    t: np.ndarray
    V: np.ndarray
    p_T: np.ndarray
    gamma: np.ndarray
    omega_c: np.ndarray
    saturated: np.ndarray
    report: BoundReport


def offset_for_level(V_target: float, d: float, c1: float, aligned: bool = True) -> float:
    """Cross-track offset y along t3 that gives V = V_target.

    With ``aligned`` the heading is on the desired frame so the attitude term
    vanishes; otherwise the heading is on the path tangent.
    """
    if aligned:
        return c1 * math.sqrt(V_target)

    def f(y):
        psi = 0.5 * (1.0 - d / math.hypot(d, y))
        return psi + (y / c1) ** 2 - V_target
    return brentq(f, 0.0, c1 * math.sqrt(V_target) + 1.0)


class KinematicLoop:
    def __init__(self, path: BernsteinPath, v: float, gains: PFGains, params: PFParams,
                 rate_bias=(0.0, 0.0)):
        self.path = path
        self.v = float(v)
        self.follower = PathFollower(path, gains, params)
        # injected inner-loop tracking error (fault fixture)
        self.rate_bias = np.asarray(rate_bias, dtype=float)

    def _eval(self, p, R, gamma, frame0: TransportFrame):
        frame = frame0 if gamma == frame0.gamma else propagate_frame(self.path, frame0, gamma)
        out = self.follower.step(FlowState(p, R, self.v), frame)
        w = np.array([0.0, *(out.omega_c + self.rate_bias)])
        return self.v * R[:, 0], R @ hat(w), out.gamma_dot, out

    def simulate(self, p0, R0, T: float, h: float, gamma0: float = 0.0) -> KinematicRun:
        """RK4 in (p, R, gamma) with the frame carried from each step start."""
        path = self.path
        n = int(math.floor(T / h + 1e-9))
        p, R, g = np.asarray(p0, float).copy(), np.asarray(R0, float).copy(), float(gamma0)
        frame = initial_frame(path, g)
        t = np.arange(n + 1) * h
        V = np.zeros(n + 1)
        pT = np.zeros((n + 1, 3))
        gam = np.zeros(n + 1)
        wc = np.zeros((n + 1, 2))
        sat = np.zeros(n + 1, dtype=bool)
        tf = path.final_time

        def clamp(x):
            return min(max(x, 0.0), tf)

        for i in range(n + 1):
            k1p, k1R, k1g, out = self._eval(p, R, g, frame)
            V[i], pT[i], gam[i] = out.V, out.err.p_T, g
            wc[i], sat[i] = out.omega_c, out.saturated
            if i == n or out.path_complete:
                t, V, pT, gam, wc, sat = t[:i + 1], V[:i + 1], pT[:i + 1], gam[:i + 1], wc[:i + 1], sat[:i + 1]
                break
            k2p, k2R, k2g, _ = self._eval(p + 0.5 * h * k1p, R + 0.5 * h * k1R,
                                          clamp(g + 0.5 * h * k1g), frame)
            k3p, k3R, k3g, _ = self._eval(p + 0.5 * h * k2p, R + 0.5 * h * k2R,
                                          clamp(g + 0.5 * h * k2g), frame)
            k4p, k4R, k4g, _ = self._eval(p + h * k3p, R + h * k3R, clamp(g + h * k3g), frame)
            p = p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
            R = orthonormalize(R + h / 6.0 * (k1R + 2 * k2R + 2 * k3R + k4R))
            g = clamp(g + h / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g))
            frame = propagate_frame(path, frame, g)
        report = bound_monitor(t, V, self.follower.params, gains=self.follower.gains,
                               inner_error=np.full(t.size, np.linalg.norm(self.rate_bias)))
        return KinematicRun(t, V, pT, gam, wc, sat, report)


def envelope_run(path: BernsteinPath, v: float, gains: PFGains, params: PFParams,
                 T: float, h: float = 0.05, level: float = 0.5,
                 aligned: bool = True, rate_bias=(0.0, 0.0)) -> KinematicRun:
    """Start on the level set V = level * c^2, offset along t3 of the start frame."""
    frame = initial_frame(path)
    y = offset_for_level(level * params.c ** 2, gains.d, params.c1, aligned)
    p0 = path.eval(0.0) + y * frame.t3
    R0 = frame.R_TI.copy()
    if aligned:
        R0 = R0 @ desired_frame(np.array([0.0, 0.0, y]), gains.d)
    return KinematicLoop(path, v, gains, params, rate_bias).simulate(p0, R0, T, h)
