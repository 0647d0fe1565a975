"""Writing run outputs: telemetry CSV and schema-checked metrics JSON."""
from __future__ import annotations

from pathlib import Path

from .metrics import Metrics, validate_metrics
from .runlog import RunLog

FORMATS = ("csv", "json", "both")


def export(log: RunLog, metrics: Metrics, out_dir, fmt: str = "both",
           stem: str = "run") -> list[Path]:
    """Write ``<stem>.csv`` (telemetry) and/or ``<stem>.metrics.json``; return the paths."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        written.append(log.write_csv(out / f"{stem}.csv"))
    if fmt in ("json", "both"):
        doc = metrics.to_json()
        validate_metrics(doc)
        f = out / f"{stem}.metrics.json"
        f.write_text(metrics.dumps() + "\n")
        written.append(f)
    return written
