"""JSON output with full-precision floats and stable key order."""

from __future__ import annotations

import json
import math

import numpy as np


def _encode(obj, out: list[str]):
    if obj is None or obj is True or obj is False:
        out.append(json.dumps(obj))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            out.append("null")
        else:
            s = format(x, ".17g")
            out.append(s if any(c in s for c in ".en") else s + ".0")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, dict):
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(", ")
            _encode(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """Serialise ``obj``; floats use 17 significant digits, non-finite become null."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)
