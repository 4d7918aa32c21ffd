"""Canonical JSON/CSV output: sorted keys, 12 significant digits."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

SIG_DIGITS = 12


def number(x: float):
    """Round to 12 significant digits; non-finite values become strings."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    r = float(f"{x:.{SIG_DIGITS}g}")
    return 0.0 if r == 0 else r


def canonical(obj: Any):
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return number(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(canonical(obj), sort_keys=True)


def csv_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(number(value)) if math.isfinite(value) else number(value)
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_row(values) -> str:
    return ",".join(csv_cell(v) for v in values)
