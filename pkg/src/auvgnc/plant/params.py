"""Surrogate vehicle constants and disturbance settings."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np


@dataclass(frozen=True)
class PlantParams:
    """Reduced-order rate dynamics, PI autopilot and suction profile.

    Rates are in rad/s, fin angles in degrees, depth in metres (positive
    down, depth = -z with inertial z pointing up).
    """
    tau_q: float = 4.0
    tau_r: float = 4.0
    b0_q: float = 0.05 / 30.0      # rad/s per deg at v_ref
    b0_r: float = 0.05 / 30.0
    v_ref: float = 5.0
    K_Pv: float = 3000.0
    K_Ph: float = 3000.0
    K_Iv: float = 50.0
    K_Ih: float = 50.0
    delta_max: float = 30.0
    F0: float = 1000.0             # kN at depth_ref and shallower
    depth_ref: float = 15.0
    depth_scale: float = 5.0
    lever_arm: float = 2.0
    mass_proxy: float = 1.0e6

    def __post_init__(self):
        if self.tau_q <= 0 or self.tau_r <= 0:
            raise ValueError("rate lags must be positive")
        if self.delta_max <= 0 or self.depth_scale <= 0 or self.mass_proxy <= 0:
            raise ValueError("delta_max, depth_scale and mass_proxy must be positive")

    def b_q(self, v: float) -> float:
        return self.b0_q * (v / self.v_ref) ** 2

    def b_r(self, v: float) -> float:
        return self.b0_r * (v / self.v_ref) ** 2

    @property
    def suction_gain(self) -> float:
        """Pitch-rate disturbance per kN of hull force."""
        return self.lever_arm / self.mass_proxy

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> "PlantParams":
        d = d or {}
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown plant parameters: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class MatchedStep:
    """Constant offset added to the autopilot rate command from t0 onwards."""
    t0: float
    q: float = 0.0
    r: float = 0.0


@dataclass(frozen=True)
class Disturbance:
    suction: bool = False
    steps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.steps) > 1:
            raise ValueError("at most one matched step is supported")

    @property
    def step(self) -> MatchedStep:
        return self.steps[0] if self.steps else MatchedStep(math.inf)

    @classmethod
    def from_dict(cls, d: dict | None) -> "Disturbance":
        d = d or {}
        steps = tuple(MatchedStep(float(s["t0"]), float(s.get("q", 0.0)), float(s.get("r", 0.0)))
                      for s in d.get("matched_steps", []))
        return cls(bool(d.get("suction", False)), steps)


# layout of the flat parameter vector consumed by the substep kernels
KERNEL_PARAMS = ("v", "tau_q", "tau_r", "b_q", "b_r", "K_Pv", "K_Ph", "K_Iv", "K_Ih",
                 "delta_max", "F0", "depth_ref", "depth_scale", "suction_gain", "k_gamma",
                 "T_f", "step_t0", "step_q", "step_r", "speed_floor")


def kernel_params(p: PlantParams, dist: Disturbance, v: float, k_gamma: float = 1.0,
                  T_f: float = 0.0, speed_floor: float = 1e-9) -> np.ndarray:
    s = dist.step
    vals = dict(v=v, tau_q=p.tau_q, tau_r=p.tau_r, b_q=p.b_q(v), b_r=p.b_r(v),
                K_Pv=p.K_Pv, K_Ph=p.K_Ph, K_Iv=p.K_Iv, K_Ih=p.K_Ih, delta_max=p.delta_max,
                F0=p.F0, depth_ref=p.depth_ref, depth_scale=p.depth_scale,
                suction_gain=p.suction_gain if dist.suction else 0.0, k_gamma=k_gamma,
                T_f=T_f, step_t0=min(s.t0, 1e300), step_q=s.q, step_r=s.r,
                speed_floor=speed_floor)
    return np.array([vals[k] for k in KERNEL_PARAMS], dtype=float)
