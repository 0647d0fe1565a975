"""Fixed-schema telemetry table with lossless CSV round trips."""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LOG_SCHEMA_VERSION = 1

COLUMNS = (
    "t", "gamma", "gamma_dot",
    "p_x", "p_y", "p_z", "depth",
    "pT_x", "pT_y", "pT_z", "Psi", "V", "in_domain",
    "q_c", "r_c", "q_m", "r_m", "q", "r", "u_q", "u_r", "sigma_norm",
    "d1", "d2", "d3", "d4", "d5", "suction_kN",
    "omega_T_norm", "omega_DT_norm", "omega_c_sat", "fin_sat",
)
COL = {name: i for i, name in enumerate(COLUMNS)}


@dataclass
class RunLog:
    """Rows sampled every ``log_interval`` seconds; flags are stored as 0.0/1.0."""
    data: np.ndarray
    columns: tuple = COLUMNS
    schema_version: int = LOG_SCHEMA_VERSION

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema_version={self.schema_version}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.data.tolist():
            buf.write(",".join(repr(v) for v in row) + "\n")
        return buf.getvalue()

    def write_csv(self, fname) -> Path:
        f = Path(fname)
        f.write_text(self.to_csv_text())
        return f

    @classmethod
    def from_csv_text(cls, text: str) -> "RunLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        version = LOG_SCHEMA_VERSION
        if lines and lines[0].startswith("#"):
            head = lines.pop(0)
            if "schema_version=" in head:
                version = int(head.split("schema_version=")[1])
        if not lines:
            raise ValueError("log has no header row")
        cols = tuple(lines[0].split(","))
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
        data = np.array(rows, dtype=float).reshape(len(rows), len(cols))
        return cls(data, cols, version)

    @classmethod
    def read_csv(cls, fname) -> "RunLog":
        return cls.from_csv_text(Path(fname).read_text())
