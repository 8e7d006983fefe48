"""Absolute-monotonicity pipeline: forward differences, mollification, coefficient recovery.

A PSD preserver has nonnegative forward differences of every order (after
mollification), so a negative difference on a mollified f is a witness that f
does not preserve PSD-ness. Passing every check up to some order is only
consistency, never a proof.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from specpreserve.core.errors import DomainError, QuadratureError
from specpreserve.core.symfun import (
    MultiIndex,
    MultiIndexSet,
    SymmetricFunction,
    check_symmetry,
)
from specpreserve.core.types import CheckReport, Verdict
from specpreserve.core.util import max_workers, progress, stopwatch

DEFAULT_H = 2.0 ** -4
DEFAULT_FD_TOL = 1e-7
MASS_TOL = 1e-6
MAX_MOLLIFY_ARITY = 3
_CHUNK_ROWS = 1 << 18


@dataclass(frozen=True)
class GridSpec:
    """Grid origin + h * k, k in {0, ..., extent - 1}^m, for differences up to max_order."""

    origin: tuple[float, ...]
    h: float
    extent: int
    max_order: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        if not self.h > 0.0:
            raise ValueError(f"grid step must be positive, got {self.h}")
        if self.max_order < 0:
            raise ValueError(f"max_order must be >= 0, got {self.max_order}")
        if self.extent < self.max_order + 1:
            raise ValueError(f"extent {self.extent} < max_order + 1 = {self.max_order + 1}")
        if any(v < 0.0 for v in self.origin):
            raise DomainError(f"grid origin must be nonnegative, got {self.origin}")

    @classmethod
    def default(
        cls,
        m: int,
        max_order: int,
        h: float = DEFAULT_H,
        extent: Optional[int] = None,
        origin: Optional[Sequence[float]] = None,
    ) -> "GridSpec":
        return cls(
            origin=tuple(origin) if origin is not None else (0.0,) * m,
            h=h,
            extent=extent if extent is not None else max_order + 1,
            max_order=max_order,
        )

    @property
    def m(self) -> int:
        return len(self.origin)

    def points(self) -> np.ndarray:
        """All grid points, C order over the index box, shape (extent**m, m)."""
        axis = np.arange(self.extent) * self.h
        mesh = np.meshgrid(*([axis] * self.m), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1) + np.asarray(self.origin)[None, :]


def bump(t: np.ndarray | float) -> np.ndarray:
    """Unnormalized exp(1 / (t (t + 1))) on (-1, 0), zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > -1.0) & (t < 0.0)
    ti = t[inside]
    out[inside] = np.exp(1.0 / (ti * (ti + 1.0)))
    return out


@dataclass(frozen=True)
class MollifierConfig:
    """Mollification radius and tensor midpoint quadrature size."""

    epsilon: float
    nodes: int = 64

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.nodes < 8:
            raise ValueError(f"need at least 8 quadrature nodes per axis, got {self.nodes}")

    @classmethod
    def for_arity(cls, epsilon: float, m: int, nodes: Optional[int] = None) -> "MollifierConfig":
        """64 nodes per axis for m <= 2, 24 for m = 3."""
        if m > MAX_MOLLIFY_ARITY:
            raise ValueError(f"mollification is limited to m <= {MAX_MOLLIFY_ARITY}, got m={m}")
        return cls(epsilon=epsilon, nodes=nodes if nodes is not None else (64 if m <= 2 else 24))

    @cached_property
    def normalization(self) -> float:
        """C such that C * bump integrates to 1."""
        mass, _ = integrate.quad(lambda s: float(bump(s)), -1.0, 0.0, epsabs=1e-14, epsrel=1e-12)
        return 1.0 / mass

    @cached_property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Midpoint nodes in (-1, 0) and weights of psi, summing to 1."""
        nodes = -1.0 + (np.arange(self.nodes) + 0.5) / self.nodes
        weights = self.normalization * bump(nodes) / self.nodes
        mass = float(np.sum(weights))
        if not math.isfinite(mass) or abs(mass - 1.0) > MASS_TOL:
            raise QuadratureError(
                f"midpoint rule with {self.nodes} nodes gives bump mass {mass!r}, "
                f"off by more than {MASS_TOL:g}"
            )
        return nodes, weights / mass

    @property
    def shift_mean(self) -> float:
        """mu = -integral t psi(t) dt; f(x) = x_1 mollifies to x_1 + epsilon * mu."""
        nodes, weights = self.quadrature
        return float(-np.sum(nodes * weights))


def forward_difference(f: SymmetricFunction, x0: Sequence[float], h: float, order: MultiIndex) -> float:
    """
    Tensor forward difference Delta_h^order f(x0).

    Sum over k <= order of prod_a (-1)^(q_a - k_a) C(q_a, k_a) f(x0 + h k),
    accumulated with math.fsum.

    Raises:
        DomainError: If x0 has a negative coordinate.
    """
    x = np.asarray(x0, dtype=float)
    if x.shape != (f.arity,) or order.arity != f.arity:
        raise ValueError(f"x0 {x.shape} / order {order.exponents} do not match arity {f.arity}")
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h}")
    if np.any(x < 0.0):
        raise DomainError("x0 leaves the nonnegative orthant")
    offsets = list(itertools.product(*(range(q + 1) for q in order.exponents)))
    weights = [
        math.prod((-1) ** (q - k) * math.comb(q, k) for q, k in zip(order.exponents, ks))
        for ks in offsets
    ]
    values = f.eval_many(x[None, :] + h * np.asarray(offsets, dtype=float))
    return math.fsum(w * float(v) for w, v in zip(weights, values))


def certify_all_fd_nonneg(f: SymmetricFunction, grid: GridSpec, tol: float = DEFAULT_FD_TOL) -> CheckReport:
    """
    Check Delta_h^q f(x0) >= -tol (1 + |f(x0)|) for every q in Con_{max_order}
    and every grid origin x0 the difference fits at.

    Witnesses are ranked by the derivative-scale value Delta / h^|q| so that
    orders are comparable; the raw difference is reported alongside.
    """
    if grid.m != f.arity:
        raise ValueError(f"grid dimension {grid.m} does not match arity {f.arity}")
    timings: dict[str, float] = {}
    shape = (grid.extent,) * grid.m
    flat = grid.points()
    with stopwatch(timings, "evaluate"):
        values = f.eval_many(flat).reshape(shape)
    points = flat.reshape(shape + (grid.m,))

    checked = 0
    violations = 0
    worst: Optional[tuple[float, float, MultiIndex, tuple[int, ...]]] = None
    lowest_scaled = math.inf
    for q in MultiIndexSet(grid.m, grid.max_order):
        diff = values
        for axis, k in enumerate(q.exponents):
            if k:
                diff = np.diff(diff, n=k, axis=axis)
        base = values[tuple(slice(0, s) for s in diff.shape)]
        scaled = diff / grid.h ** q.degree
        checked += diff.size
        if diff.size:
            lowest_scaled = min(lowest_scaled, float(np.min(scaled)))
        bad = diff < -tol * (1.0 + np.abs(base))
        count = int(np.count_nonzero(bad))
        if not count:
            continue
        violations += count
        masked = np.where(bad, scaled, np.inf)
        pos = np.unravel_index(int(np.argmin(masked)), diff.shape)
        candidate = (float(masked[pos]), float(diff[pos]), q, tuple(int(i) for i in pos))
        if worst is None or candidate[0] < worst[0]:
            worst = candidate

    details = {
        "differences_checked": checked,
        "violations": violations,
        "orders": len(MultiIndexSet(grid.m, grid.max_order)),
        "max_order": grid.max_order,
        "h": grid.h,
        "extent": grid.extent,
        "min_scaled_difference": lowest_scaled,
    }
    if worst is None:
        return CheckReport(
            check="forward_differences",
            verdict=Verdict.CERTIFIED,
            message=f"all {checked} differences up to order {grid.max_order} are >= -tol",
            tolerances={"tol": tol},
            details=details,
            timings=timings,
        )
    scaled, raw, q, pos = worst
    return CheckReport(
        check="forward_differences",
        verdict=Verdict.FALSIFIED,
        message=f"negative difference of order {q} at {points[pos].tolist()}: {raw:.6e}",
        witness={"order": list(q.exponents), "x0": points[pos].tolist(), "value": raw, "scaled_value": scaled},
        tolerances={"tol": tol},
        details=details,
        timings=timings,
    )


def mollify(f: SymmetricFunction, config: MollifierConfig) -> SymmetricFunction:
    """
    f_eps(x) = integral over (-1, 0)^m of f(x - eps t) phi(t) dt, phi = prod psi(t_j).

    Evaluated with the tensor midpoint rule of `config`; since -eps t > 0 the
    integrand never leaves the orthant. Chunks of points are spread over
    SPECPRESERVE_THREADS workers and reassembled by position.

    Raises:
        ValueError: For m > 3.
        QuadratureError: If the discrete bump mass is off by more than MASS_TOL.
    """
    m = f.arity
    if m > MAX_MOLLIFY_ARITY:
        raise ValueError(f"mollification is limited to m <= {MAX_MOLLIFY_ARITY}, got m={m}")
    nodes, weights = config.quadrature
    mesh = np.meshgrid(*([nodes] * m), indexing="ij")
    shifts = -config.epsilon * np.stack([g.ravel() for g in mesh], axis=1)
    wmesh = np.meshgrid(*([weights] * m), indexing="ij")
    tensor_weights = np.prod(np.stack([g.ravel() for g in wmesh], axis=1), axis=1)
    k = shifts.shape[0]
    chunk = max(1, _CHUNK_ROWS // k)

    def run_chunk(xs: np.ndarray) -> np.ndarray:
        pts = xs[:, None, :] + shifts[None, :, :]
        return f.eval_many(pts.reshape(-1, m)).reshape(xs.shape[0], k) @ tensor_weights

    def batch(xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        pieces = [xs[i : i + chunk] for i in range(0, xs.shape[0], chunk)]
        workers = min(max_workers(), len(pieces))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run_chunk, pieces))
        else:
            parts = [run_chunk(p) for p in pieces]
        return np.concatenate(parts) if parts else np.zeros(0)

    return SymmetricFunction.black_box(
        m,
        lambda x: float(batch(np.asarray(x, dtype=float)[None, :])[0]),
        name=f"mollified[{f.name}, eps={config.epsilon:g}]",
        batch=batch,
    )


def _richardson(estimates: list[float]) -> float:
    # estimates[k] taken at h / 2**k; error expansion in integer powers of h
    table = list(estimates)
    for j in range(1, len(table)):
        factor = 2.0 ** j
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    return table[0]


def estimate_coefficients(
    f: SymmetricFunction,
    degree: int,
    h: float = 0.25,
    richardson_levels: Optional[int] = None,
) -> SymmetricFunction:
    """
    Recover power-series coefficients a_p ~ Delta_h^p f(0) / (h^|p| p!) on Con_degree.

    Each orbit representative is extrapolated over h, h/2, ..., using
    min(richardson_levels, degree - |p|) Richardson steps, which is exact for
    polynomials of degree <= `degree`.

    Returns:
        SymmetricFunction: series body with one estimated coefficient per orbit.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    levels_cap = degree if richardson_levels is None else richardson_levels
    origin = np.zeros(f.arity)
    orbits: dict[tuple[int, ...], float] = {}
    for q in MultiIndexSet(f.arity, degree):
        if q.exponents != q.canonical().exponents:
            continue
        levels = max(0, min(levels_cap, degree - q.degree))
        estimates = []
        for k in range(levels + 1):
            step = h / 2.0 ** k
            estimates.append(forward_difference(f, origin, step, q) / step ** q.degree)
        orbits[q.exponents] = _richardson(estimates) / q.factorial()
    return SymmetricFunction.series(f.arity, orbits, degree=degree, orbits=True, name=f"estimate[{f.name}]")


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of certify_preserver."""

    epsilon_schedule: tuple[float, ...] = (0.5, 0.25, 0.125)
    max_order: int = 4
    h: float = DEFAULT_H
    extent: Optional[int] = None
    origin: Optional[tuple[float, ...]] = None
    tol: float = DEFAULT_FD_TOL
    nodes: Optional[int] = None
    symmetry_samples: int = 200
    seed: int = 0


def certify_preserver(
    f: SymmetricFunction,
    config: PipelineConfig = PipelineConfig(),
    verbose: bool = False,
) -> CheckReport:
    """
    Necessary-condition check for PSD preservation.

    Symmetry check, then for each eps in the schedule: mollify and sweep all
    forward differences up to max_order. Any negative difference means f is
    not a preserver; passing everything only means "consistent with preserver
    up to order p".
    """
    timings: dict[str, float] = {}
    tolerances = {"tol": config.tol}
    common = {"epsilon_schedule": list(config.epsilon_schedule), "max_order": config.max_order}

    sym = check_symmetry(f, samples=config.symmetry_samples, seed=config.seed)
    if sym.falsified:
        return CheckReport(
            check="certify_preserver",
            verdict=Verdict.FALSIFIED,
            message="not a preserver: f is not symmetric",
            witness={"symmetry": sym.witness},
            tolerances=tolerances,
            seed=config.seed,
            details=common,
        )
    if not config.epsilon_schedule:
        return CheckReport(
            check="certify_preserver",
            verdict=Verdict.INCONCLUSIVE,
            message="empty epsilon schedule",
            tolerances=tolerances,
            seed=config.seed,
            details=common,
        )

    grid = GridSpec.default(
        f.arity, config.max_order, h=config.h, extent=config.extent, origin=config.origin
    )
    stages = []
    notes = []
    for eps in config.epsilon_schedule:
        if f.arity > MAX_MOLLIFY_ARITY:
            target = f
            notes.append(f"mollification refused for m={f.arity} > {MAX_MOLLIFY_ARITY}; f checked directly")
        else:
            try:
                target = mollify(f, MollifierConfig.for_arity(eps, f.arity, config.nodes))
            except QuadratureError as exc:
                return CheckReport(
                    check="certify_preserver",
                    verdict=Verdict.INCONCLUSIVE,
                    message=str(exc),
                    tolerances=tolerances,
                    seed=config.seed,
                    details=common,
                )
        progress(f"eps={eps:g}: sweeping {grid.extent ** grid.m} grid points up to order {grid.max_order}", verbose)
        with stopwatch(timings, f"eps={eps:g}"):
            report = certify_all_fd_nonneg(target, grid, config.tol)
        stages.append({"epsilon": eps, "verdict": report.verdict.value, "violations": report.details["violations"]})
        if report.falsified:
            return CheckReport(
                check="certify_preserver",
                verdict=Verdict.FALSIFIED,
                message=f"not a preserver: {report.message} (eps={eps:g})",
                witness={**report.witness, "epsilon": eps},
                tolerances=tolerances,
                seed=config.seed,
                details={**common, "stages": stages, "notes": notes},
                timings=timings,
            )
        if f.arity > MAX_MOLLIFY_ARITY:
            break

    return CheckReport(
        check="certify_preserver",
        verdict=Verdict.CERTIFIED,
        message=f"consistent with preserver up to order {config.max_order}",
        tolerances=tolerances,
        seed=config.seed,
        details={**common, "stages": stages, "notes": notes},
        timings=timings,
    )
