"""Random Gram matrices X*X in PSD_n(PSD_m)."""

from __future__ import annotations

import numpy as np

from specpreserve.core.blockpsd import gen_random_gram
from specpreserve.families.base import Draw


class GramFamily:
    """gen_random_gram with random grid size and rank."""

    name = "gram"

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
            matrix=gen_random_gram(n, m, rank, seed),
            params={"n": n, "m": m, "rank": rank, "seed": seed},
        )
