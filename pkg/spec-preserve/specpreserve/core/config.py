"""Load run settings from a YAML file."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Optional

import yaml

from specpreserve.core.types import RunConfig

CONFIG_ENV = "SPECPRESERVE_CONFIG"

_POSITIVE_FLOATS = ("tol", "psd_tol", "h")
_NONNEGATIVE_INTS = ("seed", "max_order")
_POSITIVE_INTS = ("trials", "extent")


def resolve_config_path(explicit: Optional[Path]) -> Optional[Path]:
    """--config wins; otherwise SPECPRESERVE_CONFIG if set."""
    if explicit is not None:
        return explicit
    env = os.environ.get(CONFIG_ENV)
    return Path(env) if env else None


def _families(value: Any) -> tuple[str, ...]:
    if isinstance(value, str):
        items = [v.strip() for v in value.split(",")]
    elif isinstance(value, list):
        items = [str(v).strip() for v in value]
    else:
        raise ValueError("families must be a list or a comma-separated string")
    items = [v for v in items if v]
    if not items:
        raise ValueError("families must not be empty")
    return tuple(items)


def load_run_config(path: Path) -> dict[str, Any]:
    """Read run settings from a YAML file.

    Recognized keys: seed, tol, psd_tol, epsilon_schedule, max_order, h,
    extent, families, trials, exact. Unknown keys are rejected so that typos
    do not silently fall back to defaults.

    Args:
        path: YAML file.

    Returns:
        Validated overrides for RunConfig.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file is not a mapping or a value has the wrong type or range.
    """
    if not path.exists():
        raise FileNotFoundError(f"config not found at: {path}")

    data = yaml.safe_load(path.read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{path} must contain a mapping of settings")

    allowed = {"seed", "tol", "psd_tol", "epsilon_schedule", "max_order", "h", "extent", "families", "trials", "exact"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"Unknown config keys in {path}: {', '.join(unknown)}")

    out: dict[str, Any] = {}
    for key in _POSITIVE_FLOATS:
        if key in data:
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ValueError(f"'{key}' must be a positive number, got {value!r}")
            out[key] = float(value)
    for key in _NONNEGATIVE_INTS + _POSITIVE_INTS:
        if key in data:
            value = data[key]
            floor = 1 if key in _POSITIVE_INTS else 0
            if isinstance(value, bool) or not isinstance(value, int) or value < floor:
                raise ValueError(f"'{key}' must be an integer >= {floor}, got {value!r}")
            out[key] = value
    if "epsilon_schedule" in data:
        schedule = data["epsilon_schedule"]
        if not isinstance(schedule, list) or not schedule:
            raise ValueError("'epsilon_schedule' must be a non-empty list")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0 for v in schedule):
            raise ValueError(f"'epsilon_schedule' entries must be positive numbers, got {schedule!r}")
        out["epsilon_schedule"] = tuple(float(v) for v in schedule)
    if "families" in data:
        out["families"] = _families(data["families"])
    if "exact" in data:
        if not isinstance(data["exact"], bool):
            raise ValueError(f"'exact' must be true or false, got {data['exact']!r}")
        out["exact"] = data["exact"]
    return out


def build_run_config(command: str, config_path: Optional[Path], **overrides: Any) -> RunConfig:
    """Defaults, then the YAML file, then non-None command-line overrides."""
    base = RunConfig(command=command)
    path = resolve_config_path(config_path)
    if path is not None:
        base = base.with_overrides(**load_run_config(path))
    return base.with_overrides(**overrides)
