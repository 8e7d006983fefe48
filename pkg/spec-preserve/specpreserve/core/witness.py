"""Counterexample machinery: the J-construction, Gram and monotonicity probes, random search.

Every falsification carries enough payload (blocks, points, seeds) to be
replayed from the report alone.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Optional, Sequence

import numpy as np

from specpreserve.core.blockpsd import (
    BlockMatrix,
    apply_spectral,
    apply_spectral_product,
    block_product,
    diagonal_blocks,
    gen_lemma4_family,
    is_block_psd,
)
from specpreserve.core.codec import encode_block_matrix
from specpreserve.core.construct import build_family, solve_functional
from specpreserve.core.errors import DomainError, EigenConvergenceError
from specpreserve.core.linalg import DEFAULT_PSD_TOL, HermitianMatrix, is_psd
from specpreserve.core.symfun import MultiIndex, PowerSeries, SymmetricFunction, is_diagonal_form
from specpreserve.core.types import CheckReport, Verdict
from specpreserve.core.util import make_rng, max_workers, progress, spawn_seeds

if TYPE_CHECKING:
    from specpreserve.families.base import BlockFamily, Draw

DETECTION_TOL = 1e-7


@dataclass(frozen=True)
class Theorem6Config:
    """Parameters of the J-construction: D1 = diag(x_1..x_r, eps..eps), D2 = J D1 J."""

    m: int
    r: int
    x: tuple[float, ...]
    epsilon: float
    shrink: float = 0.5
    max_steps: int = 60

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 1 <= self.r <= self.m:
            raise ValueError(f"r must lie in 1..{self.m}, got {self.r}")
        if len(self.x) != self.r or any(v <= 0.0 for v in self.x):
            raise ValueError(f"x must hold {self.r} positive values, got {self.x}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink factor must lie in (0, 1), got {self.shrink}")
        if self.max_steps < 0:
            raise ValueError(f"max_steps must be >= 0, got {self.max_steps}")

    @classmethod
    def reference(cls, m: int = 2) -> "Theorem6Config":
        """r = 1, x = (1,), eps = 0.1."""
        return cls(m=m, r=1, x=(1.0,), epsilon=0.1)

    def at(self, epsilon: float) -> "Theorem6Config":
        return replace(self, epsilon=epsilon)

    def to_dict(self) -> dict[str, Any]:
        return {"m": self.m, "r": self.r, "x": list(self.x), "epsilon": self.epsilon}


@dataclass(frozen=True, eq=False)
class WitnessReport:
    """Outcome of one J-construction evaluation or search."""

    verdict: Verdict
    matrix: np.ndarray
    determinant: float
    min_eigenvalue: float
    epsilon: float
    config: Theorem6Config
    blocks: tuple[BlockMatrix, BlockMatrix]
    steps: int = 0
    message: str = ""
    # positive orbit whose support fixed r; None when r came from the fallback sweep
    monomial: Optional[tuple[int, ...]] = None

    @property
    def falsified(self) -> bool:
        return self.verdict is Verdict.FALSIFIED

    def to_check_report(self, check: str = "theorem6", tol: float = DETECTION_TOL) -> CheckReport:
        monomial = list(self.monomial) if self.monomial is not None else None
        witness = {
            "config": self.config.to_dict(),
            "epsilon": self.epsilon,
            "matrix": self.matrix.tolist(),
            "determinant": self.determinant,
            "min_eigenvalue": self.min_eigenvalue,
            "blocks": [encode_block_matrix(b) for b in self.blocks],
            "monomial": monomial,
        }
        return CheckReport(
            check=check,
            verdict=self.verdict,
            message=self.message,
            witness=witness if self.verdict is not Verdict.CERTIFIED else {},
            tolerances={"tol": tol},
            details={
                "steps": self.steps,
                "determinant": self.determinant,
                "epsilon": self.epsilon,
                "monomial": monomial,
            },
        )


def _d1(cfg: Theorem6Config) -> np.ndarray:
    return np.array(list(cfg.x) + [cfg.epsilon] * (cfg.m - cfg.r))


def theorem6_blocks(cfg: Theorem6Config) -> tuple[BlockMatrix, BlockMatrix]:
    """
    A = [[D1, D1 J], [J D1, D2]] and B = [[D2, D2 J], [J D2, D1]] with D2 = J D1 J.

    The lower-left blocks are the adjoints of the upper-right ones, so both
    grids are Hermitian; A = [I; J] D1 [I, J] and likewise for B, hence both
    are PSD. The products A_ab B_ab are D1 D2, D1^2, D2^2, D2 D1.
    """
    d1 = np.diag(_d1(cfg))
    j = np.fliplr(np.eye(cfg.m))
    d2 = j @ d1 @ j
    ma = BlockMatrix.from_grid([[d1, d1 @ j], [j @ d1, d2]])
    mb = BlockMatrix.from_grid([[d2, d2 @ j], [j @ d2, d1]])
    return ma, mb


def theorem6_determinant(f: SymmetricFunction, cfg: Theorem6Config, tol: float = DETECTION_TOL) -> WitnessReport:
    """Evaluate [f(A_ab B_ab)] on the J-construction and its determinant."""
    if f.arity != cfg.m:
        raise ValueError(f"arity {f.arity} does not match m={cfg.m}")
    ma, mb = theorem6_blocks(cfg)
    values = apply_spectral_product(f, block_product(ma, mb))
    mat = np.real(values.entries)
    det = float(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
    lowest = is_psd(values).min_eigenvalue
    falsified = det < -tol or lowest < -tol
    verdict = Verdict.FALSIFIED if falsified else Verdict.CERTIFIED
    return WitnessReport(
        verdict=verdict,
        matrix=mat,
        determinant=det,
        min_eigenvalue=lowest,
        epsilon=cfg.epsilon,
        config=cfg,
        blocks=(ma, mb),
        message=f"det[f(A B)] = {det:.6e} at eps={cfg.epsilon:g} (r={cfg.r})",
    )


@dataclass(frozen=True)
class GapSearch:
    """Epsilon schedule and x scales for falsify_diagonal_gap."""

    epsilon: float = 0.5
    shrink: float = 0.5
    max_steps: int = 60
    tol: float = DETECTION_TOL
    scales: tuple[float, ...] = (1.0, 2.0)


def _offending_monomials(series: PowerSeries) -> dict[int, tuple[int, ...]]:
    """Support size -> lowest-degree positive orbit with exactly that many nonzero exponents."""
    out: dict[int, tuple[int, ...]] = {}
    for key, value in series.orbits.items():
        if value > 0.0 and any(key):
            out.setdefault(sum(1 for e in key if e), key)
    return dict(sorted(out.items()))


def falsify_diagonal_gap(
    f: SymmetricFunction,
    search: GapSearch = GapSearch(),
    verbose: bool = False,
) -> WitnessReport:
    """
    Search for a negative determinant of the J-construction.

    Starts at the smallest r such that a positive coefficient sits on a
    monomial in exactly r variables, then tries every other r in 1..m-1; for
    each r and x scale, eps shrinks geometrically until det < -tol or the step
    cap.

    Raises:
        TypeError: For black-box f.
        DomainError: If f is of diagonal form or has a negative coefficient.
    """
    diagonal, _ = is_diagonal_form(f)
    if diagonal:
        raise DomainError("f is a series in x_1...x_m alone; no J-construction witness exists")
    series = f.body
    assert isinstance(series, PowerSeries)
    negative = [key for key, value in series.orbits.items() if value < 0.0]
    if negative:
        raise DomainError(f"coefficient of {negative[0]} is negative")

    m = f.arity
    monomials = {r: key for r, key in _offending_monomials(series).items() if r <= m - 1}
    sizes = list(monomials)
    order = sizes[:1] + [r for r in range(1, m) if r not in sizes[:1]]
    best: Optional[WitnessReport] = None
    for r in order:
        for scale in search.scales:
            cfg = Theorem6Config(m=m, r=r, x=(scale,) * r, epsilon=search.epsilon,
                                 shrink=search.shrink, max_steps=search.max_steps)
            for step in range(search.max_steps + 1):
                eps = search.epsilon * search.shrink ** step
                report = replace(
                    theorem6_determinant(f, cfg.at(eps), search.tol), steps=step, monomial=monomials.get(r)
                )
                if report.falsified:
                    progress(f"r={r}, x={scale:g}: det {report.determinant:.3e} at eps={eps:g}", verbose)
                    return report
                if best is None or report.determinant < best.determinant:
                    best = report
            progress(f"r={r}, x={scale:g}: no negative determinant after {search.max_steps} steps", verbose)
    assert best is not None
    return replace(
        best,
        verdict=Verdict.INCONCLUSIVE,
        message=f"no determinant below -{search.tol:g}; lowest {best.determinant:.3e}",
    )


def _slice_determinants(x: Sequence[float], y: Sequence[float]) -> list[Fraction]:
    out = []
    for xi, yi in zip(x, y):
        fx, fy = Fraction(xi), Fraction(yi)
        out.append(fx * fx * fy * fy - (fx * fy) ** 2)
    return out


def lemma1_gram_witness(
    f: SymmetricFunction,
    x: Sequence[float],
    y: Sequence[float],
    tol: float = DEFAULT_PSD_TOL,
    literal: bool = False,
) -> CheckReport:
    """
    Gram witness [[diag(x*x), diag(x*y)], [diag(x*y), diag(y*y)]].

    Each coordinate slice [[x_i^2, x_i y_i], [x_i y_i, y_i^2]] is an exact
    rank-one Gram matrix, so the grid is block-PSD and a preserver must give
    f(x*y)^2 <= f(x*x) f(y*y).

    With literal=True the right-hand side is f(x) f(y) instead. That form has
    no preserver claim behind it: a violation is reported as inconclusive.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.shape != (f.arity,) or yv.shape != (f.arity,):
        raise ValueError(f"x {xv.shape} and y {yv.shape} must both have length {f.arity}")
    if np.any(xv < 0.0) or np.any(yv < 0.0):
        raise DomainError("x and y must be nonnegative")

    slices = _slice_determinants(xv.tolist(), yv.tolist())
    if any(d != 0 for d in slices):
        raise ArithmeticError("Gram slice determinant is not exactly zero")
    grid = diagonal_blocks(np.stack([np.stack([xv * xv, xv * yv]), np.stack([xv * yv, yv * yv])]))
    block_verdict = is_block_psd(grid, tol)

    values = np.real(apply_spectral(f, grid, tol).entries)
    lhs = float(values[0, 1]) ** 2
    rhs = f(xv) * f(yv) if literal else float(values[0, 0] * values[1, 1])
    violated = lhs > rhs + tol * max(1.0, abs(rhs))
    details = {
        "form": "literal" if literal else "squared",
        "lhs": lhs,
        "rhs": rhs,
        "slice_determinants": [float(d) for d in slices],
        "block_psd": block_verdict.is_psd,
        "block_min_eigenvalue": block_verdict.min_eigenvalue,
    }
    if not violated:
        return CheckReport(
            check="gram_inequality",
            verdict=Verdict.CERTIFIED,
            message=f"{lhs:.6g} <= {rhs:.6g}",
            tolerances={"tol": tol},
            details=details,
        )
    return CheckReport(
        check="gram_inequality",
        verdict=Verdict.INCONCLUSIVE if literal else Verdict.FALSIFIED,
        message=f"{lhs:.6g} > {rhs:.6g}" + (" (literal form, no preserver claim)" if literal else ""),
        witness={"x": xv.tolist(), "y": yv.tolist(), "matrix": values.tolist()},
        tolerances={"tol": tol},
        details=details,
    )


def monotonicity_probe(
    f: SymmetricFunction,
    samples: int = 1000,
    seed: int = 0,
    tol: float = DEFAULT_PSD_TOL,
) -> CheckReport:
    """
    Sample x in [0, 2)^m, a coordinate i and delta in (0, 1]; flag f(x) < -tol
    or f(x + delta e_i) < f(x) - tol (1 + |f(x)|).
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    m = f.arity
    rng = make_rng(seed)
    xs = 2.0 * rng.random((samples, m))
    coords = rng.integers(0, m, size=samples)
    deltas = 1.0 - rng.random(samples)
    moved = xs.copy()
    moved[np.arange(samples), coords] += deltas
    fx = f.eval_many(xs)
    fm = f.eval_many(moved)

    negativity = np.minimum(fx, fm) + tol
    drop = fm - fx + tol * (1.0 + np.abs(fx))
    tolerances = {"tol": tol}
    details = {"samples": samples}
    k = int(np.argmin(negativity))
    if negativity[k] < 0.0:
        point = xs[k] if fx[k] <= fm[k] else moved[k]
        return CheckReport(
            check="monotonicity",
            verdict=Verdict.FALSIFIED,
            message=f"f is negative at {point.tolist()}: {min(fx[k], fm[k]):.6e}",
            witness={"kind": "negativity", "x": point.tolist(), "value": float(min(fx[k], fm[k]))},
            tolerances=tolerances,
            seed=seed,
            details=details,
        )
    k = int(np.argmin(drop))
    if drop[k] < 0.0:
        return CheckReport(
            check="monotonicity",
            verdict=Verdict.FALSIFIED,
            message=f"f decreases along x_{int(coords[k]) + 1} at {xs[k].tolist()}",
            witness={
                "kind": "monotonicity",
                "x": xs[k].tolist(),
                "coordinate": int(coords[k]),
                "delta": float(deltas[k]),
                "f_x": float(fx[k]),
                "f_moved": float(fm[k]),
            },
            tolerances=tolerances,
            seed=seed,
            details=details,
        )
    return CheckReport(
        check="monotonicity",
        verdict=Verdict.CERTIFIED,
        message=f"nonnegative and increasing on {samples} samples",
        tolerances=tolerances,
        seed=seed,
        details=details,
    )


@dataclass(frozen=True, eq=False)
class _Trial:
    index: int
    family: str
    min_eigenvalue: Optional[float] = None
    is_psd: bool = True
    matrix: Optional[HermitianMatrix] = None
    draw: Optional["Draw"] = None
    skipped: str = ""


def _run_trial(
    f: SymmetricFunction,
    family: "BlockFamily",
    index: int,
    seed: np.random.SeedSequence,
    tol: float,
) -> _Trial:
    draw = family.draw(make_rng(seed), f.arity)
    try:
        if draw.pair is not None:
            prod = block_product(*draw.pair, tol=tol)
            if not prod.admissible:
                return _Trial(index, family.name, skipped="; ".join(prod.diagnostics))
            values = apply_spectral_product(f, prod)
        else:
            values = apply_spectral(f, draw.matrix, tol)
        verdict = is_psd(values, tol)
    except (DomainError, EigenConvergenceError) as exc:
        return _Trial(index, family.name, skipped=str(exc))
    return _Trial(index, family.name, verdict.min_eigenvalue, verdict.is_psd, values, draw)


def _draw_payload(draw: "Draw") -> dict[str, Any]:
    out: dict[str, Any] = {"params": draw.params}
    if draw.pair is not None:
        out["blocks"] = [encode_block_matrix(b) for b in draw.pair]
    else:
        out["blocks"] = [encode_block_matrix(draw.matrix)]
    return out


def random_falsify(
    f: SymmetricFunction,
    families: Sequence["BlockFamily"],
    trials: int = 200,
    seed: int = 0,
    tol: float = DEFAULT_PSD_TOL,
    verbose: bool = False,
) -> CheckReport:
    """
    Draw block matrices from `families` (round robin) and look for a
    non-PSD [f(A_ab)] or [f(A_ab B_ab)].

    Trial k uses the k-th child of SeedSequence(seed), so results do not
    depend on SPECPRESERVE_THREADS. The reported witness is the trial with
    the lowest min eigenvalue, ties broken by trial index.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    tolerances = {"tol": tol}
    usable = [fam for fam in families if fam.supports(f.arity)]
    names = [fam.name for fam in usable]
    if not usable:
        return CheckReport(
            check="random_search",
            verdict=Verdict.INCONCLUSIVE,
            message=f"no family can draw blocks of size m={f.arity}",
            tolerances=tolerances,
            seed=seed,
            details={"families": [fam.name for fam in families], "trials": 0},
        )

    seeds = spawn_seeds(seed, trials)
    jobs = [(usable[k % len(usable)], k, seeds[k]) for k in range(trials)]
    workers = min(max_workers(), trials)
    progress(f"{trials} trials over {', '.join(names)} ({workers} worker(s))", verbose)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _run_trial(f, job[0], job[1], job[2], tol), jobs))
    else:
        results = [_run_trial(f, fam, k, s, tol) for fam, k, s in jobs]

    done = [r for r in results if not r.skipped]
    per_family: dict[str, float] = {}
    for r in done:
        per_family[r.family] = min(per_family.get(r.family, math.inf), r.min_eigenvalue)
    details = {
        "families": names,
        "trials": trials,
        "evaluated": len(done),
        "skipped": len(results) - len(done),
        "min_eigenvalue_by_family": per_family,
    }
    if not done:
        return CheckReport(
            check="random_search",
            verdict=Verdict.INCONCLUSIVE,
            message="every trial was skipped",
            tolerances=tolerances,
            seed=seed,
            details=details,
        )

    worst = min(done, key=lambda r: (r.min_eigenvalue, r.index))
    details["min_eigenvalue"] = worst.min_eigenvalue
    failing = [r for r in done if not r.is_psd]
    if not failing:
        return CheckReport(
            check="random_search",
            verdict=Verdict.CERTIFIED,
            message=f"all {len(done)} evaluated trials PSD (lowest eigenvalue {worst.min_eigenvalue:.3e})",
            tolerances=tolerances,
            seed=seed,
            details=details,
        )
    witness = min(failing, key=lambda r: (r.min_eigenvalue, r.index))
    return CheckReport(
        check="random_search",
        verdict=Verdict.FALSIFIED,
        message=f"trial {witness.index} ({witness.family}): min eigenvalue {witness.min_eigenvalue:.6e}",
        witness={
            "trial": witness.index,
            "family": witness.family,
            "min_eigenvalue": witness.min_eigenvalue,
            "matrix": np.real(witness.matrix.entries).tolist(),
            **_draw_payload(witness.draw),
        },
        tolerances=tolerances,
        seed=seed,
        details={**details, "failing_trials": len(failing)},
    )


def lemma4_quadratic_probe(
    f: SymmetricFunction,
    x: Sequence[float],
    q: MultiIndex,
    t: Sequence[float] | float,
    tol: float = DEFAULT_PSD_TOL,
) -> CheckReport:
    """
    Quadratic form z^T [f(M_bc)] z on the diagonal block family at x.

    Nodes are a_1b = b/n (exact), z is the least-norm functional isolating q
    on Con_|q|, and M_bc = diag(x_a + t_a a_ab a_ac). Up to O(t^(|q|+1)) the
    form equals t^q d^q f(x) / q!, so the normalized value estimates d^q f(x).
    A negative form is a witness: M is block-PSD and [f(M)] is not PSD.
    """
    m = f.arity
    if q.arity != m:
        raise ValueError(f"order {q} does not match arity {m}")
    tv = np.broadcast_to(np.asarray(t, dtype=float), (m,)).copy()
    if np.any(tv <= 0.0):
        raise ValueError(f"t must be positive, got {tv.tolist()}")
    p = q.degree
    n = (p + 2) ** m
    fam = build_family(p, m, base_nodes=[Fraction(b, n) for b in range(1, n + 1)])
    sol = solve_functional(fam, q)
    nodes = np.array([[float(fam.node(alpha, beta)) for beta in range(n)] for alpha in range(m)])
    grid = gen_lemma4_family(x, tv, nodes)
    values = np.real(apply_spectral(f, grid, tol).entries)
    z = np.asarray(sol.weights)
    form = float(z @ values @ z)
    scale = math.prod(tv[a] ** e / math.factorial(e) for a, e in enumerate(q.exponents))
    estimate = form / scale
    bound = tol * (1.0 + float(z @ z) * float(np.max(np.abs(values))))
    details = {
        "n": n,
        "p": p,
        "quadratic_form": form,
        "derivative_estimate": estimate,
        "functional_residual": sol.max_residual,
    }
    base = {"x": list(map(float, x)), "order": list(q.exponents), "t": tv.tolist()}
    if form < -bound:
        return CheckReport(
            check="quadratic_probe",
            verdict=Verdict.FALSIFIED,
            message=f"z^T f(M) z = {form:.6e} < 0 (derivative estimate {estimate:.6g})",
            witness={**base, "z": list(sol.weights), "blocks": [encode_block_matrix(grid)]},
            tolerances={"tol": tol},
            details=details,
        )
    return CheckReport(
        check="quadratic_probe",
        verdict=Verdict.CERTIFIED,
        message=f"z^T f(M) z = {form:.6e} (derivative estimate {estimate:.6g})",
        witness=base,
        tolerances={"tol": tol},
        details=details,
    )
