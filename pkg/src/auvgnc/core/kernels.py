"""Selects the compiled kernels when available, else the Python ones.

Set AUVGNC_PURE_PYTHON=1 to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

NCOL = _kernels_py.NCOL
NSTATE = _kernels_py.NSTATE

try:
    if os.environ.get("AUVGNC_PURE_PYTHON"):
        raise ImportError("pure-Python kernel forced by environment")
    from ._kernels import advance, transport  # type: ignore[attr-defined]
    BACKEND = "compiled"
except ImportError:
    advance = _kernels_py.advance
    transport = _kernels_py.transport
    BACKEND = "python"

advance_py = _kernels_py.advance
transport_py = _kernels_py.transport

__all__ = ["advance", "advance_py", "transport", "transport_py", "BACKEND", "NCOL", "NSTATE"]
