"""Scenario configuration: JSON loading, schema validation and defaults."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from ..l1.controller import DesiredSystem
from ..lti import LtiSystem
from ..path import BernsteinPath, PathBounds
from ..pf import PFGains, PFParams
from ..plant.params import Disturbance, PlantParams

SCHEMA_VERSION = 1
PRESETS = ("depth_change", "lane_change", "canyon")

DEFAULT_M = [{"num": [0.1], "den": [1.0, 0.1]}, {"num": [0.1], "den": [1.0, 0.1]}]
DEFAULT_C = [{"num": [0.1], "den": [1.0, 2.1, 1.2, 0.1]},
             {"num": [1e-6], "den": [1.0, 0.03, 3e-4, 1e-6]}]


class ConfigError(ValueError):
    pass


def _load_json_resource(*parts: str) -> dict:
    return json.loads(resources.files("auvgnc.sim").joinpath(*parts).read_text())


def config_schema() -> dict:
    return _load_json_resource("schemas", "config.schema.json")


def load_preset(name: str) -> BernsteinPath:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return BernsteinPath.from_json(_load_json_resource("presets", f"{name}.json"))


def preset_bounds(name: str) -> PathBounds | None:
    data = _load_json_resource("presets", f"{name}.json")
    b = data.get("bounds")
    return PathBounds(**b) if b else None


@dataclass(frozen=True)
class L1Config:
    M: LtiSystem
    C: LtiSystem
    Q: np.ndarray | None = None
    zero_sigma: bool = False

    @property
    def desired(self) -> DesiredSystem:
        return DesiredSystem(self.M)


@dataclass(frozen=True)
class ScenarioConfig:
    path: BernsteinPath
    speed: float
    adaptation: bool
    Ts: float
    dt: float
    duration: float
    pf_gains: PFGains = field(default_factory=PFGains)
    pf_params: PFParams | None = None
    l1: L1Config | None = None
    plant: PlantParams = field(default_factory=PlantParams)
    disturbances: Disturbance = field(default_factory=Disturbance)
    log_interval: float = 1.0
    converge_tol: float = 0.5
    initial_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initial_pitch_deg: float = 0.0
    initial_yaw_deg: float = 0.0
    bounds: PathBounds | None = None
    seed: int = 0
    name: str = ""
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.duration < 0 or self.dt <= 0 or self.Ts <= 0:
            raise ConfigError("dt and Ts must be positive and duration nonnegative")
        if self.dt > self.Ts / 5.0 + 1e-15:
            raise ConfigError(f"dt={self.dt} must not exceed Ts/5={self.Ts / 5}")
        if not _is_multiple(self.Ts, self.dt):
            raise ConfigError("Ts must be an integer multiple of dt")
        if not _is_multiple(self.log_interval, self.Ts):
            raise ConfigError("log_interval must be an integer multiple of Ts")

    @property
    def substeps(self) -> int:
        return int(round(self.Ts / self.dt))

    @property
    def log_every(self) -> int:
        return int(round(self.log_interval / self.Ts))

    @property
    def n_ticks(self) -> int:
        return int(math.floor(self.duration / self.Ts + 1e-9))

    def with_overrides(self, **changes) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        raw.update(changes)
        return parse_config(raw)


def _is_multiple(a: float, b: float) -> bool:
    r = a / b
    return abs(r - round(r)) < 1e-9 and round(r) >= 1


def _tf_system(entries) -> LtiSystem:
    return LtiSystem.diag_tf([(e["num"], e["den"]) for e in entries])


def parse_config(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Validate a configuration dictionary and build the typed scenario."""
    try:
        jsonschema.validate(raw, config_schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"invalid config at '{loc}': {exc.message}") from None
    try:
        p = raw["path"]
        bounds = None
        if "preset" in p:
            path = load_preset(p["preset"])
            bounds = preset_bounds(p["preset"])
        elif "file" in p:
            f = Path(p["file"])
            if not f.is_absolute() and base_dir is not None:
                f = base_dir / f
            path = BernsteinPath.load(f)
        else:
            path = BernsteinPath.from_json(p["inline"])
        if "bounds" in raw:
            bounds = PathBounds(**raw["bounds"])
        adapt = raw.get("adaptation", "on")
        l1 = raw.get("l1", {})
        Q = l1.get("Q")
        l1cfg = L1Config(_tf_system(l1.get("M", DEFAULT_M)), _tf_system(l1.get("C", DEFAULT_C)),
                         None if Q is None else np.asarray(Q, dtype=float),
                         bool(l1.get("zero_sigma", False)))
        init = raw.get("initial", {})
        return ScenarioConfig(
            path=path,
            speed=float(raw["speed"]),
            adaptation=adapt in ("on", True),
            Ts=float(raw["Ts"]),
            dt=float(raw["dt"]),
            duration=float(raw["duration"]),
            pf_gains=PFGains(**raw.get("pf_gains", {})),
            pf_params=PFParams.from_dict(raw["pf_params"]) if "pf_params" in raw else None,
            l1=l1cfg,
            plant=PlantParams.from_dict(raw.get("plant")),
            disturbances=Disturbance.from_dict(raw.get("disturbances")),
            log_interval=float(raw.get("log_interval", 1.0)),
            converge_tol=float(raw.get("converge_tol", 0.5)),
            initial_offset=np.asarray(init.get("position_offset", [0.0, 0.0, 0.0]), dtype=float),
            initial_pitch_deg=float(init.get("pitch_deg", 0.0)),
            initial_yaw_deg=float(init.get("yaw_deg", 0.0)),
            bounds=bounds,
            seed=int(raw.get("seed", 0)),
            name=str(raw.get("name", "")),
            raw=copy.deepcopy(raw),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError, OSError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(fname) -> ScenarioConfig:
    f = Path(fname)
    try:
        raw = json.loads(f.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {f}: {exc}") from exc
    return parse_config(raw, f.parent)


def bundled_config(name: str) -> ScenarioConfig:
    """One of the scenario files shipped with the package (without extension)."""
    try:
        raw = _load_json_resource("configs", f"{name}.json")
    except FileNotFoundError:
        raise ConfigError(f"no bundled config {name!r}") from None
    return parse_config(raw)


def bundled_config_names() -> list[str]:
    root = resources.files("auvgnc.sim").joinpath("configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
