"""Diagonal block family diag(x_a + t_a a_ab a_ac)."""

from __future__ import annotations

import numpy as np

from specpreserve.core.blockpsd import gen_lemma4_family
from specpreserve.families.base import Draw


class Lemma4Family:
    name = "lemma4"

    def __init__(self, max_n: int = 4):
        self.max_n = max_n

    def supports(self, m: int) -> bool:
        return m >= 1

    def draw(self, rng: np.random.Generator, m: int) -> Draw:
        n = int(rng.integers(2, self.max_n + 1))
        x = rng.random(m)
        t = rng.random(m)
        a = 1.0 - rng.random((m, n))
        return Draw(
            family=self.name,
            matrix=gen_lemma4_family(x, t, a),
            params={"x": x.tolist(), "t": t.tolist(), "a": a.tolist()},
        )
