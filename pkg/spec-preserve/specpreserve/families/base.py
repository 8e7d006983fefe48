"""Protocol for block-matrix generator families used by the random search."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Protocol

import numpy as np

from specpreserve.core.blockpsd import BlockMatrix


@dataclass(frozen=True, eq=False)
class Draw:
    """One sample: a single block matrix, or a pair whose blockwise product is tested."""

    family: str
    matrix: Optional[BlockMatrix] = None
    pair: Optional[tuple[BlockMatrix, BlockMatrix]] = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.matrix is None) == (self.pair is None):
            raise ValueError("a draw holds exactly one of matrix / pair")


class BlockFamily(Protocol):
    """Block family protocol."""

    name: str

    def supports(self, m: int) -> bool:
        ...

    def draw(self, rng: np.random.Generator, m: int) -> Draw:
        ...
