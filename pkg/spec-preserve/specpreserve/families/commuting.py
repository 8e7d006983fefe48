"""Pairs in PSD_n(PSD_m) whose blocks share one eigenbasis."""

from __future__ import annotations

import numpy as np

from specpreserve.core.blockpsd import gen_commuting_pair
from specpreserve.families.base import Draw


class CommutingFamily:
    name = "commuting"

    def __init__(self, max_n: int = 4, max_rank: int = 3):
        self.max_n = max_n
        self.max_rank = max_rank

    def supports(self, m: int) -> bool:
        return m >= 1

    def draw(self, rng: np.random.Generator, m: int) -> Draw:
        n = int(rng.integers(2, self.max_n + 1))
        rank = int(rng.integers(1, self.max_rank + 1))
        seed = int(rng.integers(0, 2**32))
        return Draw(
            family=self.name,
            pair=gen_commuting_pair(n, m, rank, seed),
            params={"n": n, "m": m, "rank": rank, "seed": seed},
        )
