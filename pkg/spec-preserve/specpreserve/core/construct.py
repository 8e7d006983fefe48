"""Vandermonde node families, moment vectors and the isolating linear functional.

For p >= 0 and m >= 1 take n = (p+2)^m pairwise distinct positive base nodes
a_1b and derived nodes a_ab = a_1b^((p+2)^(a-1)). The moment vector of an
index q has entries prod_a a_ab^(q_a) = a_1b^e(q), with the exponent map
e(q) = sum_a q_a (p+2)^(a-1) injective on Con_p, so the moment vectors of Con_p
are rows of a Vandermonde matrix with distinct exponents.

Exact mode keeps nodes as Fractions (integers by default) and decides rank by
fraction-free elimination. Float mode works with logarithms of the nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Optional, Sequence

import numpy as np

from specpreserve.core.errors import DomainError, PrecisionError, RankDeficiencyError
from specpreserve.core.symfun import MultiIndex, MultiIndexSet
from specpreserve.core.types import CheckReport, Verdict

MAX_NODES = 4096
SIGMA_MIN = 1e-10
RESIDUAL_TOL = 1e-8
# exp(-x) stays a normal binary64 for x up to about 708
LOG_TINY = -math.log(np.finfo(float).tiny)


def exponent_map(index: MultiIndex, p: int) -> int:
    """e(q) = sum_a q_a (p+2)^(a-1)."""
    radix = p + 2
    return sum(q * radix ** alpha for alpha, q in enumerate(index.exponents))


def exponent_map_injective(p: int, m: int) -> bool:
    """Enumerate Con_p and check that e takes distinct values on it."""
    seen = {exponent_map(idx, p) for idx in MultiIndexSet(m, p)}
    return len(seen) == len(MultiIndexSet(m, p))


@dataclass(frozen=True, eq=False)
class VandermondeFamily:
    """Node family for Con_p in m variables; base nodes are Fractions in exact mode, floats otherwise."""

    p: int
    m: int
    base_nodes: tuple
    exact: bool = True

    @property
    def radix(self) -> int:
        return self.p + 2

    @property
    def n(self) -> int:
        return self.radix ** self.m

    @cached_property
    def index_set(self) -> MultiIndexSet:
        return MultiIndexSet(self.m, self.p)

    def node(self, alpha: int, beta: int):
        """a_{alpha+1, beta+1} (0-based arguments), exact in exact mode."""
        return self.base_nodes[beta] ** (self.radix ** alpha)

    @cached_property
    def log_nodes(self) -> np.ndarray:
        """log a_ab as an (m, n) array."""
        logs = np.log(np.asarray([float(v) for v in self.base_nodes]))
        scale = self.radix ** np.arange(self.m, dtype=float)
        return scale[:, None] * logs[None, :]

    def summary(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "n": self.n,
            "mode": "exact" if self.exact else "float",
            "base_nodes": [str(v) if self.exact else float(v) for v in self.base_nodes],
            "con_size": len(self.index_set),
        }


@dataclass(frozen=True)
class MomentVector:
    """v(q): entry b is prod_a a_ab^(q_a)."""

    index: MultiIndex
    entries: tuple
    log_entries: tuple[float, ...]


@dataclass(frozen=True)
class FunctionalSolution:
    """Least-norm z with <v(p), z> = [p == q] over Con_p."""

    q: MultiIndex
    weights: tuple[float, ...]
    residuals: tuple[float, ...]
    exact_weights: Optional[tuple[Fraction, ...]] = None

    @property
    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals), default=0.0)


def build_family(
    p: int,
    m: int,
    base_nodes: Optional[Sequence] = None,
    exact: bool = True,
) -> VandermondeFamily:
    """
    Build the node family for (p, m).

    Args:
        p: Degree bound, >= 0.
        m: Number of variables, >= 1.
        base_nodes: n = (p+2)^m distinct positive values; defaults to 1..n.
        exact: Keep nodes as Fractions (True) or floats (False).

    Raises:
        ValueError: If (p+2)^m exceeds MAX_NODES or the node count is wrong.
        DomainError: On duplicate or non-positive nodes.
    """
    if p < 0 or m < 1:
        raise ValueError(f"need p >= 0 and m >= 1, got p={p}, m={m}")
    n = (p + 2) ** m
    if n > MAX_NODES:
        raise ValueError(f"family size (p+2)^m = {n} exceeds the limit of {MAX_NODES}")
    raw = list(base_nodes) if base_nodes is not None else list(range(1, n + 1))
    if len(raw) != n:
        raise ValueError(f"expected {n} base nodes for p={p}, m={m}, got {len(raw)}")
    nodes = tuple(Fraction(v) for v in raw) if exact else tuple(float(v) for v in raw)
    if any(v <= 0 for v in nodes):
        raise DomainError("base nodes must be positive")
    if len(set(nodes)) != n:
        raise DomainError("base nodes must be pairwise distinct")
    return VandermondeFamily(p=p, m=m, base_nodes=nodes, exact=exact)


def moment_vector(fam: VandermondeFamily, index: MultiIndex) -> MomentVector:
    """
    Moment vector of `index`, entries prod_a a_ab^(q_a).

    Raises:
        ValueError: If `index` is not in Con_p of the family.
    """
    if index not in fam.index_set:
        raise ValueError(f"index {index} is not in Con_{fam.p} for m={fam.m}")
    exps = np.asarray(index.exponents, dtype=float)
    logs = tuple(float(v) for v in exps @ fam.log_nodes)
    if fam.exact:
        entries = tuple(
            math.prod((fam.node(alpha, beta) ** q for alpha, q in enumerate(index.exponents)), start=Fraction(1))
            for beta in range(fam.n)
        )
    else:
        with np.errstate(over="ignore"):
            entries = tuple(float(v) for v in np.exp(np.asarray(logs)))
    return MomentVector(index=index, entries=entries, log_entries=logs)


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    out = []
    for row in rows:
        scale = reduce(math.lcm, (v.denominator for v in row), 1)
        out.append([int(v * scale) for v in row])
    return out


def _bareiss_rank(rows: list[list[int]]) -> int:
    # entries after step k are (k+1)-minors, so the division by the previous pivot is exact
    a = [list(r) for r in rows]
    if not a:
        return 0
    nrows, ncols = len(a), len(a[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        if rank == nrows:
            break
        pivot = next((r for r in range(rank, nrows) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        lead = a[rank][col]
        for r in range(rank + 1, nrows):
            factor = a[r][col]
            for c in range(col + 1, ncols):
                a[r][c] = (a[r][c] * lead - factor * a[rank][c]) // prev
            a[r][col] = 0
        prev = lead
        rank += 1
    return rank


def _normalized_stack(fam: VandermondeFamily) -> tuple[np.ndarray, np.ndarray]:
    """Moment vectors as rows scaled to unit 2-norm, plus the log of each row's scale."""
    logs = np.array([moment_vector(fam, idx).log_entries for idx in fam.index_set])
    top = logs.max(axis=1, keepdims=True)
    rows = np.exp(logs - top)
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    return rows / norms, (top + np.log(norms)).ravel()


def verify_independence(fam: VandermondeFamily) -> CheckReport:
    """
    Decide whether the |Con_p| moment vectors are linearly independent.

    Exact mode computes the rank by fraction-free elimination. Float mode
    takes the smallest singular value of the row-normalized stack; a value at
    or below SIGMA_MIN is inconclusive, never a falsification.
    """
    members = fam.index_set.members
    details: dict = {**fam.summary(), "vectors": len(members)}
    if fam.exact:
        rows = _integer_rows([moment_vector(fam, idx).entries for idx in members])
        rank = _bareiss_rank(rows)
        details["rank"] = rank
        if rank == len(members):
            return CheckReport(
                check="independence",
                verdict=Verdict.CERTIFIED,
                message=f"rank {rank} = |Con_{fam.p}| (exact)",
                details=details,
            )
        return CheckReport(
            check="independence",
            verdict=Verdict.FALSIFIED,
            message=f"rank {rank} < |Con_{fam.p}| = {len(members)} (exact)",
            details=details,
        )

    stack, _ = _normalized_stack(fam)
    sigma = np.linalg.svd(stack, compute_uv=False)
    sigma_min = float(sigma[-1]) if sigma.size else 0.0
    details["sigma_min"] = sigma_min
    details["rank"] = int(np.count_nonzero(sigma > SIGMA_MIN))
    if sigma_min > SIGMA_MIN:
        return CheckReport(
            check="independence",
            verdict=Verdict.CERTIFIED,
            message=f"smallest singular value {sigma_min:.3e} > {SIGMA_MIN:g}",
            tolerances={"sigma_min": SIGMA_MIN},
            details=details,
        )
    return CheckReport(
        check="independence",
        verdict=Verdict.INCONCLUSIVE,
        message=f"smallest singular value {sigma_min:.3e} <= {SIGMA_MIN:g}; floating point cannot decide",
        tolerances={"sigma_min": SIGMA_MIN},
        details=details,
    )


def _solve_fraction(g: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan on a nonsingular Fraction system."""
    k = len(g)
    aug = [list(row) + [b] for row, b in zip(g, rhs)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if pivot is None:
            raise RankDeficiencyError("Gram matrix of the moment vectors is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        lead = aug[col][col]
        aug[col] = [v / lead for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[k] for row in aug]


def solve_functional(fam: VandermondeFamily, q: MultiIndex) -> FunctionalSolution:
    """
    Least-norm z with <v(p), z> = [p == q] for every p in Con_p.

    Exact mode solves the normal equations V V^T y = e_q in Fractions and sets
    z = V^T y, so the residuals are exactly zero. Float mode solves the same
    system with each row scaled to unit norm (the solution set is unchanged)
    by lstsq; residuals are reported in the scaled rows, divided by the
    scaled target right-hand side.

    Raises:
        ValueError: If q is not in Con_p.
        RankDeficiencyError: If the moment vectors are dependent.
        PrecisionError: If the scale of v(q) pushes the weights below binary64 range.
    """
    if q not in fam.index_set:
        raise ValueError(f"target {q} is not in Con_{fam.p} for m={fam.m}")
    members = fam.index_set.members
    target = fam.index_set.position(q)

    if fam.exact:
        rows = [moment_vector(fam, idx).entries for idx in members]
        gram = [[sum((a * b for a, b in zip(ri, rj)), Fraction(0)) for rj in rows] for ri in rows]
        rhs = [Fraction(int(i == target)) for i in range(len(members))]
        y = _solve_fraction(gram, rhs)
        z = [sum((y[i] * rows[i][beta] for i in range(len(rows))), Fraction(0)) for beta in range(fam.n)]
        residuals = tuple(
            float(sum((a * b for a, b in zip(row, z)), Fraction(0)) - rhs[i]) for i, row in enumerate(rows)
        )
        return FunctionalSolution(
            q=q,
            weights=tuple(float(v) for v in z),
            residuals=residuals,
            exact_weights=tuple(z),
        )

    stack, log_scale = _normalized_stack(fam)
    if np.linalg.matrix_rank(stack, tol=SIGMA_MIN) < len(members):
        raise RankDeficiencyError(f"moment vectors of Con_{fam.p} are numerically dependent")
    if not math.isfinite(log_scale[target]) or log_scale[target] > LOG_TINY:
        raise PrecisionError(
            f"v({q}) has scale exp({log_scale[target]:.1f}); the weights underflow binary64"
        )
    rhs = np.zeros(len(members))
    rhs[target] = math.exp(-log_scale[target])
    z, *_ = np.linalg.lstsq(stack, rhs, rcond=None)
    # relative to the target right-hand side
    residuals = tuple(float(v) for v in (stack @ z - rhs) / rhs[target])
    return FunctionalSolution(q=q, weights=tuple(float(v) for v in z), residuals=residuals)
