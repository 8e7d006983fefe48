"""JSON formatter."""

from __future__ import annotations

import json
import math
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np


def to_jsonable(value: Any) -> Any:
    """
    Coerce a result tree into plain JSON types.

    numpy scalars and arrays become Python numbers and lists, complex numbers
    become {"re", "im"}, Fractions become strings, and non-finite floats become
    the strings "inf", "-inf" and "nan".
    """
    if isinstance(value, Enum):
        return to_jsonable(value.value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, complex):
        if value.imag == 0.0:
            return to_jsonable(value.real)
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    if isinstance(value, float):
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return str(value)


def format_float(value: float) -> str:
    """17 significant digits, always with a '.' or exponent so it parses back as a float."""
    text = f"{value:.17g}"
    if not any(c in text for c in ".e"):
        text += ".0"
    return text


def _encode(value: Any, level: int) -> str:
    pad = "  " * (level + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(value[k], level + 1)}" for k in sorted(value)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * level + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [pad + _encode(v, level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + "  " * level + "]"
    if isinstance(value, float):
        return format_float(value)
    return json.dumps(value, allow_nan=False)


def render(result: dict[str, Any]) -> str:
    """
    Render a result as pretty JSON with sorted keys.

    Same layout as json.dumps(indent=2, sort_keys=True); floats carry 17
    significant digits so golden files stay bit-stable across platforms.
    """
    return _encode(to_jsonable(result), 0)
