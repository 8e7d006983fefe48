"""Core types used across modules, families and flows."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Optional


class Verdict(str, Enum):
    """Outcome of a check."""

    CERTIFIED = "certified"
    FALSIFIED = "falsified"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CheckReport:
    """Result of a certification or falsification check.

    `witness` holds whatever reproduces a falsification (points, orders,
    block payloads); `details` holds everything else worth reporting.
    Timings are kept apart so that serialized reports stay byte-stable.
    """

    check: str
    verdict: Verdict
    message: str = ""
    witness: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    seed: Optional[int] = None
    details: dict[str, Any] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    @property
    def falsified(self) -> bool:
        return self.verdict is Verdict.FALSIFIED

    def to_dict(self, include_timings: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "check": self.check,
            "verdict": self.verdict.value,
            "message": self.message,
            "witness": self.witness,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "details": self.details,
        }
        if include_timings:
            out["timings"] = self.timings
        return out


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to replay a CLI run.

    The function payload is embedded (not just its path) so a report carries
    its own inputs.
    """

    command: str
    function: Optional[dict[str, Any]] = None
    input_path: Optional[str] = None
    m: Optional[int] = None
    seed: int = 0
    tol: float = 1e-7
    psd_tol: float = 1e-9
    epsilon_schedule: tuple[float, ...] = (0.5, 0.25, 0.125)
    max_order: int = 4
    h: float = 0.0625
    extent: Optional[int] = None
    families: tuple[str, ...] = ("gram", "lemma4", "thm6")
    trials: int = 200
    p: Optional[int] = None
    q: Optional[tuple[int, ...]] = None
    exact: bool = True
    demo: Optional[str] = None
    out: Optional[str] = None

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with every non-None override applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("out", None)
        for key in ("epsilon_schedule", "families", "q"):
            if out.get(key) is not None:
                out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in data.items() if k in known}
        for key in ("epsilon_schedule", "families", "q"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)
