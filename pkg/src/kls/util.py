"""Small shared helpers: worker count, stable float formatting."""

from __future__ import annotations

import math
import os

WORKER_ENV = "KLS_THREADS"


def worker_count() -> int:
    """Worker cap from the KLS_THREADS environment variable (default 1)."""
    raw = os.environ.get(WORKER_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def fmt_float(x: float) -> str:
    """Render a float with 12 significant digits (stable golden-file output)."""
    if isinstance(x, float) and math.isfinite(x):
        return f"{x:.12g}"
    return str(x)


def round12(x: float) -> float:
    """Round to 12 significant digits; keeps emitted JSON byte-stable."""
    if isinstance(x, float) and math.isfinite(x):
        return float(f"{x:.12g}")
    return x


def json_ready(obj):
    """Recursively round floats inside JSON-serializable structures."""
    if isinstance(obj, float):
        return round12(obj)
    if isinstance(obj, dict):
        return {k: json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    return obj
