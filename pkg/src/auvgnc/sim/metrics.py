"""Scenario metrics and their JSON schema."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import jsonschema
import numpy as np

METRICS_SCHEMA_VERSION = 1


@dataclass
class Metrics:
    max_overshoot_depth: float
    max_overshoot_lateral: float
    max_abs_qm_minus_q: float
    max_abs_rm_minus_r: float
    envelope_violations: int
    time_to_converge: float | None
    T_b_empirical: float | None
    extras: dict = field(default_factory=dict)
    schema_version: int = METRICS_SCHEMA_VERSION

    def to_json(self) -> dict:
        return _clean(asdict(self))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def metrics_schema() -> dict:
    return json.loads(resources.files("auvgnc.sim").joinpath("schemas", "metrics.schema.json")
                      .read_text())


def validate_metrics(doc: dict) -> None:
    jsonschema.validate(doc, metrics_schema())


def overshoot(series, start: float, target: float, tol: float = 1e-9) -> float:
    """Largest excursion beyond the target in the direction of travel.

    With no commanded change the largest absolute deviation is returned.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        return 0.0
    delta = target - start
    if abs(delta) < tol:
        return float(np.max(np.abs(x - target)))
    s = math.copysign(1.0, delta)
    return float(max(0.0, np.max(s * (x - target))))
