"""JSON payloads for functions, matrices and block matrices."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from specpreserve.core.blockpsd import BlockMatrix
from specpreserve.core.errors import SchemaError
from specpreserve.core.linalg import HermitianMatrix
from specpreserve.core.symfun import BlackBox, DiagonalSeries, PowerSeries, SymmetricFunction, builtin

FUNCTION_KINDS = ("series", "diagonal", "builtin")


def read_json(path: Path) -> Any:
    """
    Load a JSON document.

    Raises:
        FileNotFoundError: If `path` does not exist.
        SchemaError: If the file is not valid JSON.
    """
    if not path.exists():
        raise FileNotFoundError(f"input not found at: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from None


def _require(payload: dict, key: str, kind: type | tuple[type, ...]) -> Any:
    if key not in payload:
        raise SchemaError(f"missing key '{key}'")
    value = payload[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise SchemaError(f"key '{key}' has the wrong type: {type(value).__name__}")
    return value


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"{where} must be a finite number, got {value!r}")
    return float(value)


def parse_function(payload: Any) -> SymmetricFunction:
    """
    Build a SymmetricFunction from its JSON payload.

    Payloads:
        {"arity": m, "kind": "series", "coeffs": [{"index": [...], "value": x}, ...],
         "orbits": false, "degree": d}
        {"arity": m, "kind": "diagonal", "b": [b_0, b_1, ...]}
        {"arity": m, "kind": "builtin", "name": "sum" | "product" | "exp_sum" | "max" | "power_sum:k"}

    With "orbits": true one representative per permutation orbit is enough;
    otherwise the full coefficient map must be symmetric.

    Raises:
        SchemaError: On any structural problem, including asymmetric coefficients.
    """
    if not isinstance(payload, dict):
        raise SchemaError("function payload must be a JSON object")
    arity = _require(payload, "arity", int)
    if arity < 1:
        raise SchemaError(f"arity must be >= 1, got {arity}")
    kind = _require(payload, "kind", str)
    if kind not in FUNCTION_KINDS:
        raise SchemaError(f"unknown kind '{kind}'; expected one of {', '.join(FUNCTION_KINDS)}")
    name = payload.get("name", "")

    try:
        if kind == "builtin":
            f = builtin(_require(payload, "name", str), arity)
        elif kind == "diagonal":
            b = _require(payload, "b", list)
            f = SymmetricFunction.diagonal(arity, [_number(v, "b entry") for v in b], name=name)
        else:
            coeffs = {}
            for i, item in enumerate(_require(payload, "coeffs", list)):
                if not isinstance(item, dict):
                    raise SchemaError(f"coeffs[{i}] must be an object")
                index = _require(item, "index", list)
                if not all(isinstance(e, int) and not isinstance(e, bool) for e in index):
                    raise SchemaError(f"coeffs[{i}].index must be a list of integers")
                key = tuple(index)
                if key in coeffs:
                    raise SchemaError(f"duplicate index {list(key)}")
                coeffs[key] = _number(item.get("value"), f"coeffs[{i}].value")
            degree = payload.get("degree")
            if degree is not None and (not isinstance(degree, int) or isinstance(degree, bool)):
                raise SchemaError("degree must be an integer")
            f = SymmetricFunction.series(
                arity, coeffs, degree=degree, orbits=bool(payload.get("orbits", False)), name=name
            )
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    return SymmetricFunction(f.arity, f.body, name=f.name, payload=dict(payload))


def load_function(path: Path) -> SymmetricFunction:
    return parse_function(read_json(path))


def encode_function(f: SymmetricFunction) -> dict[str, Any]:
    """Payload that parse_function maps back to an equivalent function."""
    if f.payload is not None:
        return dict(f.payload)
    if isinstance(f.body, PowerSeries):
        return {
            "arity": f.arity,
            "kind": "series",
            "orbits": True,
            "degree": f.body.degree,
            "name": f.name,
            "coeffs": [{"index": list(k), "value": v} for k, v in f.body.orbits.items()],
        }
    if isinstance(f.body, DiagonalSeries):
        return {"arity": f.arity, "kind": "diagonal", "name": f.name, "b": list(f.body.b)}
    if isinstance(f.body, BlackBox):
        return {"arity": f.arity, "kind": "builtin", "name": f.body.name}
    raise SchemaError(f"cannot encode body {type(f.body).__name__}")


def encode_array(a: np.ndarray) -> dict[str, Any]:
    a = np.asarray(a)
    out: dict[str, Any] = {"re": np.real(a).tolist()}
    if np.iscomplexobj(a) and np.any(np.imag(a) != 0.0):
        out["im"] = np.imag(a).tolist()
    return out


def _decode_array(payload: Any, shape: tuple[int, ...], where: str) -> np.ndarray:
    if not isinstance(payload, dict) or "re" not in payload:
        raise SchemaError(f"{where} must be an object with 're' (and optional 'im')")
    try:
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros(shape)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where} has non-numeric entries: {exc}") from None
    if re.shape != shape or im.shape != shape:
        raise SchemaError(f"{where} has shape {re.shape}/{im.shape}, expected {shape}")
    return re + 1j * im


def encode_matrix(a: HermitianMatrix) -> dict[str, Any]:
    return {"dim": a.dim, **encode_array(a.entries)}


def decode_matrix(payload: Any) -> HermitianMatrix:
    """{"dim": d, "re": [[...]], "im": [[...]]} -> HermitianMatrix."""
    if not isinstance(payload, dict):
        raise SchemaError("matrix payload must be a JSON object")
    dim = _require(payload, "dim", int)
    return HermitianMatrix(_decode_array(payload, (dim, dim), "matrix"))


def encode_block_matrix(mat: BlockMatrix) -> dict[str, Any]:
    return {
        "n": mat.n,
        "m": mat.m,
        "blocks": [[encode_array(mat.block(a, b)) for b in range(mat.n)] for a in range(mat.n)],
    }


def decode_block_matrix(payload: Any) -> BlockMatrix:
    """{"n": n, "m": m, "blocks": [[{"re", "im"}, ...], ...]} -> BlockMatrix."""
    if not isinstance(payload, dict):
        raise SchemaError("block matrix payload must be a JSON object")
    n = _require(payload, "n", int)
    m = _require(payload, "m", int)
    grid = _require(payload, "blocks", list)
    if len(grid) != n or not all(isinstance(row, list) and len(row) == n for row in grid):
        raise SchemaError(f"blocks must be an {n} x {n} grid")
    blocks = np.array(
        [[_decode_array(grid[a][b], (m, m), f"blocks[{a}][{b}]") for b in range(n)] for a in range(n)]
    )
    return BlockMatrix(blocks)


def is_block_payload(payload: Any) -> bool:
    return isinstance(payload, dict) and "blocks" in payload
