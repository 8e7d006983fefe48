"""The J-construction pair with random r, x and eps."""

from __future__ import annotations

import numpy as np

from specpreserve.core.witness import Theorem6Config, theorem6_blocks
from specpreserve.families.base import Draw


class Theorem6Family:
    """r in 1..m-1, x in (0, 2]^r, eps in (0, 1]."""

    name = "thm6"

    def supports(self, m: int) -> bool:
        return m >= 2

    def draw(self, rng: np.random.Generator, m: int) -> Draw:
        if not self.supports(m):
            raise ValueError(f"the J-construction needs m >= 2, got m={m}")
        r = int(rng.integers(1, m))
        x = 2.0 * (1.0 - rng.random(r))
        eps = 1.0 - rng.random()
        cfg = Theorem6Config(m=m, r=r, x=tuple(x), epsilon=float(eps))
        return Draw(family=self.name, pair=theorem6_blocks(cfg), params=cfg.to_dict())
