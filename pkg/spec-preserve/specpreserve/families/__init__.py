"""Block-matrix generator families."""

from __future__ import annotations

from typing import Sequence

from specpreserve.families.base import BlockFamily, Draw
from specpreserve.families.commuting import CommutingFamily
from specpreserve.families.gram import GramFamily
from specpreserve.families.lemma4 import Lemma4Family
from specpreserve.families.thm6 import Theorem6Family

FAMILIES = {
    GramFamily.name: GramFamily,
    Lemma4Family.name: Lemma4Family,
    Theorem6Family.name: Theorem6Family,
    CommutingFamily.name: CommutingFamily,
}


def get_families(names: Sequence[str]) -> list[BlockFamily]:
    """Instantiate families by name, in the given order."""
    out: list[BlockFamily] = []
    for name in names:
        if name not in FAMILIES:
            raise ValueError(f"Unsupported family '{name}'. Expected one of {', '.join(FAMILIES)}.")
        out.append(FAMILIES[name]())
    return out


__all__ = ["BlockFamily", "Draw", "FAMILIES", "get_families"]
