"""Symmetric functions on the nonnegative orthant and their spectral evaluation.

A SymmetricFunction is one of three bodies:

- PowerSeries: a truncated multivariate series, stored one coefficient per
  permutation orbit (canonical key = exponents sorted descending).
- DiagonalSeries: sum_j b_j (x_1 ... x_m)^j.
- BlackBox: a pure sampler declared symmetric, optionally with a vectorized
  batch form.

Series bodies are evaluated on the sorted argument, so f(x) and f(pi x) run the
exact same floating-point operations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterator, Mapping, Optional, Sequence, Union

import numpy as np

from specpreserve.core.errors import DomainError
from specpreserve.core.linalg import DEFAULT_PSD_TOL, HermitianMatrix, eigenvalues_hermitian, is_psd
from specpreserve.core.types import CheckReport, Verdict
from specpreserve.core.util import make_rng


@dataclass(frozen=True, order=True)
class MultiIndex:
    """(p_1, ..., p_m) with nonnegative integer entries."""

    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"multi-index entries must be >= 0, got {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def arity(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def support(self) -> int:
        """Number of coordinates with a positive exponent."""
        return sum(1 for e in self.exponents if e > 0)

    @property
    def is_diagonal(self) -> bool:
        return len(set(self.exponents)) <= 1

    def canonical(self) -> "MultiIndex":
        return MultiIndex(tuple(sorted(self.exponents, reverse=True)))

    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self.exponents)

    def __str__(self) -> str:
        return "(" + ",".join(str(e) for e in self.exponents) + ")"


@dataclass(frozen=True)
class MultiIndexSet:
    """Con_p: every MultiIndex of arity m with degree <= p, ordered by (degree, exponents)."""

    m: int
    p: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.p < 0:
            raise ValueError(f"need m >= 1 and p >= 0, got m={self.m}, p={self.p}")

    @cached_property
    def members(self) -> tuple[MultiIndex, ...]:
        raw = [e for e in itertools.product(range(self.p + 1), repeat=self.m) if sum(e) <= self.p]
        raw.sort(key=lambda e: (sum(e), e))
        return tuple(MultiIndex(e) for e in raw)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item: object) -> bool:
        return isinstance(item, MultiIndex) and item.arity == self.m and item.degree <= self.p

    def position(self, index: MultiIndex) -> int:
        return self.members.index(index)


@lru_cache(maxsize=None)
def orbit(exponents: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """All distinct permutations of `exponents`, sorted."""
    return tuple(sorted(set(itertools.permutations(exponents))))


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Truncated series sum_p a_p x^p, one coefficient per permutation orbit."""

    orbits: Mapping[tuple[int, ...], float]
    degree: int

    @classmethod
    def from_coefficients(
        cls,
        arity: int,
        coeffs: Mapping[Sequence[int], float],
        degree: Optional[int] = None,
    ) -> "PowerSeries":
        """
        Build from a full coefficient map, rejecting asymmetric input.

        Indices absent from `coeffs` count as 0, so {(1, 0): 1} is rejected
        because (0, 1) would carry 0.

        Args:
            arity: Number of variables m.
            coeffs: Map from exponent tuples to real coefficients.
            degree: Truncation degree; defaults to the largest index degree.

        Returns:
            PowerSeries: One stored coefficient per orbit.

        Raises:
            DomainError: If the map is not invariant under coordinate permutations.
            ValueError: On arity mismatch or non-finite coefficients.
        """
        full: dict[tuple[int, ...], float] = {}
        for idx, value in coeffs.items():
            key = _check_index(idx, arity)
            full[key] = _check_coeff(value, key)
        orbits: dict[tuple[int, ...], float] = {}
        for key, value in full.items():
            for perm in orbit(key):
                other = full.get(perm, 0.0)
                if other != value:
                    raise DomainError(
                        f"coefficient map is not symmetric: a{key}={value} but a{perm}={other}"
                    )
            orbits[tuple(sorted(key, reverse=True))] = value
        return cls._build(orbits, degree)

    @classmethod
    def from_orbits(
        cls,
        arity: int,
        orbits: Mapping[Sequence[int], float],
        degree: Optional[int] = None,
    ) -> "PowerSeries":
        """Build from one representative per orbit; representatives of the same orbit must agree."""
        out: dict[tuple[int, ...], float] = {}
        for idx, value in orbits.items():
            key = tuple(sorted(_check_index(idx, arity), reverse=True))
            value = _check_coeff(value, key)
            if key in out and out[key] != value:
                raise DomainError(f"conflicting coefficients for orbit {key}: {out[key]} vs {value}")
            out[key] = value
        return cls._build(out, degree)

    @classmethod
    def _build(cls, orbits: dict[tuple[int, ...], float], degree: Optional[int]) -> "PowerSeries":
        top = max((sum(k) for k in orbits), default=0)
        if degree is None:
            degree = top
        elif degree < top:
            raise ValueError(f"truncation degree {degree} is below the largest index degree {top}")
        ordered = dict(sorted(orbits.items(), key=lambda kv: (sum(kv[0]), kv[0])))
        return cls(orbits=ordered, degree=int(degree))

    def coefficient(self, index: Sequence[int]) -> float:
        return float(self.orbits.get(tuple(sorted(index, reverse=True)), 0.0))

    def items(self) -> Iterator[tuple[MultiIndex, float]]:
        """Every (index, coefficient) pair of the full map, orbits expanded."""
        for key, value in self.orbits.items():
            for perm in orbit(key):
                yield MultiIndex(perm), value

    @cached_property
    def _expanded(self) -> tuple[np.ndarray, np.ndarray]:
        pairs = [(idx.exponents, value) for idx, value in self.items() if value != 0.0]
        if not pairs:
            return np.zeros((0, 0), dtype=float), np.zeros(0)
        exps = np.array([e for e, _ in pairs], dtype=float)
        coeffs = np.array([v for _, v in pairs], dtype=float)
        return exps, coeffs

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        """Evaluate rows of xs (already sorted ascending)."""
        exps, coeffs = self._expanded
        if coeffs.size == 0:
            return np.zeros(xs.shape[0])
        # rows sorted ascending, exponents expanded over full orbits
        monomials = np.prod(xs[:, None, :] ** exps[None, :, :], axis=2)
        return monomials @ coeffs


@dataclass(frozen=True)
class DiagonalSeries:
    """sum_j b_j (x_1 ... x_m)^j."""

    b: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(v) for v in self.b)
        if not coeffs:
            raise ValueError("diagonal series needs at least one coefficient")
        if not all(math.isfinite(v) for v in coeffs):
            raise ValueError(f"diagonal series coefficients must be finite, got {coeffs}")
        object.__setattr__(self, "b", coeffs)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.prod(xs, axis=1), np.asarray(self.b))


@dataclass(frozen=True, eq=False)
class BlackBox:
    """Pure sampler R_+^m -> R declared symmetric; `batch` maps (N, m) -> (N,)."""

    name: str
    sampler: Callable[[np.ndarray], float]
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(xs), dtype=float).reshape(xs.shape[0])
        return np.array([float(self.sampler(row)) for row in xs], dtype=float)


Body = Union[PowerSeries, DiagonalSeries, BlackBox]


@dataclass(frozen=True, eq=False)
class SymmetricFunction:
    """A symmetric function of `arity` nonnegative variables."""

    arity: int
    body: Body
    name: str = ""
    payload: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise ValueError(f"arity must be >= 1, got {self.arity}")

    @classmethod
    def series(
        cls,
        arity: int,
        coeffs: Mapping[Sequence[int], float],
        degree: Optional[int] = None,
        orbits: bool = False,
        name: str = "",
    ) -> "SymmetricFunction":
        build = PowerSeries.from_orbits if orbits else PowerSeries.from_coefficients
        return cls(arity, build(arity, coeffs, degree), name=name or "series")

    @classmethod
    def diagonal(cls, arity: int, b: Sequence[float], name: str = "") -> "SymmetricFunction":
        return cls(arity, DiagonalSeries(tuple(b)), name=name or "diagonal")

    @classmethod
    def black_box(
        cls,
        arity: int,
        sampler: Callable[[np.ndarray], float],
        name: str = "black_box",
        batch: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> "SymmetricFunction":
        return cls(arity, BlackBox(name, sampler, batch), name=name)

    @property
    def kind(self) -> str:
        if isinstance(self.body, PowerSeries):
            return "series"
        if isinstance(self.body, DiagonalSeries):
            return "diagonal"
        return "black_box"

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        """Evaluate each row of an (N, arity) array of nonnegative points."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.arity:
            raise ValueError(f"expected points of shape (N, {self.arity}), got {xs.shape}")
        if np.any(xs < 0.0):
            raise DomainError("evaluation point leaves the nonnegative orthant")
        if isinstance(self.body, BlackBox):
            return self.body.evaluate(xs)
        return self.body.evaluate(np.sort(xs, axis=1))

    def __call__(self, x: Sequence[float]) -> float:
        return eval_point(self, x)


def _check_index(idx: Sequence[int], arity: int) -> tuple[int, ...]:
    key = MultiIndex(tuple(idx)).exponents
    if len(key) != arity:
        raise ValueError(f"index {key} has length {len(key)}, expected arity {arity}")
    return key


def _check_coeff(value: float, key: tuple[int, ...]) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"coefficient of {key} is not finite")
    return value


def eval_point(f: SymmetricFunction, x: Sequence[float]) -> float:
    """
    Evaluate f at one point of the nonnegative orthant.

    Raises:
        ValueError: If len(x) != f.arity.
        DomainError: If a coordinate is negative.
    """
    xs = np.asarray(x, dtype=float)
    if xs.shape != (f.arity,):
        raise ValueError(f"point has shape {xs.shape}, expected ({f.arity},)")
    if isinstance(f.body, BlackBox):
        if np.any(xs < 0.0):
            raise DomainError("evaluation point leaves the nonnegative orthant")
        return float(f.body.sampler(xs))
    return float(f.eval_many(xs[None, :])[0])


def clamped_spectrum(a: HermitianMatrix, tol: float = DEFAULT_PSD_TOL) -> np.ndarray:
    """Eigenvalues of a PSD matrix with round-off negatives clamped to 0."""
    verdict = is_psd(a, tol)
    if not verdict.is_psd:
        raise DomainError(
            f"matrix is not PSD: min eigenvalue {verdict.min_eigenvalue:.3e} "
            f"< -{verdict.tolerance_used:.3e}"
        )
    return np.maximum(eigenvalues_hermitian(a), 0.0)


def eval_spectral(f: SymmetricFunction, a: HermitianMatrix, tol: float = DEFAULT_PSD_TOL) -> float:
    """f(A) := f(lambda_1(A), ..., lambda_m(A)) for PSD A."""
    if a.dim != f.arity:
        raise ValueError(f"matrix dim {a.dim} does not match arity {f.arity}")
    return eval_point(f, clamped_spectrum(a, tol))


def check_symmetry(
    f: SymmetricFunction,
    samples: int = 200,
    seed: int = 0,
    tol: float = 1e-12,
) -> CheckReport:
    """
    Check f(x) == f(pi x) on random points and permutations.

    Series bodies are symmetric by representation and are certified without
    sampling. Black boxes are first probed at e_1 under the swap of the first
    two coordinates, then at `samples` random points of [0, 1)^m.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    tolerances = {"tol": tol}
    if not isinstance(f.body, BlackBox) or f.arity == 1:
        return CheckReport(
            check="symmetry",
            verdict=Verdict.CERTIFIED,
            message="symmetric by representation",
            tolerances=tolerances,
            seed=seed,
            details={"samples_used": 0},
        )

    m = f.arity
    rng = make_rng(seed)
    probes: list[tuple[np.ndarray, np.ndarray]] = []
    swap = np.arange(m)
    swap[[0, 1]] = [1, 0]
    probes.append((np.eye(m)[0], swap))
    for _ in range(samples):
        probes.append((rng.random(m), rng.permutation(m)))

    worst = -1.0
    witness: dict = {}
    for x, perm in probes:
        deviation = abs(eval_point(f, x) - eval_point(f, x[perm]))
        if deviation > worst:
            worst = deviation
            witness = {"x": x.tolist(), "permutation": perm.tolist(), "deviation": deviation}

    if worst <= tol:
        return CheckReport(
            check="symmetry",
            verdict=Verdict.CERTIFIED,
            message=f"max deviation {worst:.3e} over {len(probes)} probes",
            tolerances=tolerances,
            seed=seed,
            details={"samples_used": samples, "max_deviation": worst},
        )
    return CheckReport(
        check="symmetry",
        verdict=Verdict.FALSIFIED,
        message=f"f(x) != f(pi x): deviation {worst:.3e}",
        witness=witness,
        tolerances=tolerances,
        seed=seed,
        details={"samples_used": samples, "max_deviation": worst},
    )


def is_diagonal_form(f: SymmetricFunction, tol: float = 0.0) -> tuple[bool, Optional[MultiIndex]]:
    """
    Decide whether f is a series in the single variable x_1 ... x_m.

    Returns:
        (True, None) when every coefficient above `tol` sits on an index with
        all exponents equal; otherwise (False, first offending index).

    Raises:
        TypeError: For black-box bodies.
    """
    if isinstance(f.body, DiagonalSeries):
        return True, None
    if not isinstance(f.body, PowerSeries):
        raise TypeError("is_diagonal_form needs a series body, not a black box")
    for key, value in f.body.orbits.items():
        if abs(value) > tol and len(set(key)) > 1:
            return False, MultiIndex(key)
    return True, None


# Builtins


def constant(arity: int, c: float) -> SymmetricFunction:
    return SymmetricFunction.series(arity, {(0,) * arity: c}, orbits=True, name=f"const:{c:g}")


def power_sum(arity: int, k: int = 1) -> SymmetricFunction:
    key = (k,) + (0,) * (arity - 1)
    return SymmetricFunction.series(arity, {key: 1.0}, orbits=True, name="sum" if k == 1 else f"power_sum:{k}")


def product(arity: int) -> SymmetricFunction:
    return SymmetricFunction.series(arity, {(1,) * arity: 1.0}, orbits=True, name="product")


def exp_sum_series(arity: int, degree: int) -> SymmetricFunction:
    """Degree-`degree` truncation of exp(x_1 + ... + x_m): a_p = 1 / prod p_alpha!."""
    orbits = {
        idx.exponents: 1.0 / idx.factorial()
        for idx in MultiIndexSet(arity, degree)
        if idx.exponents == idx.canonical().exponents
    }
    return SymmetricFunction.series(arity, orbits, degree=degree, orbits=True, name=f"exp_sum:{degree}")


def _exp_sum(arity: int) -> SymmetricFunction:
    return SymmetricFunction.black_box(
        arity,
        lambda x: math.exp(float(np.sum(x))),
        name="exp_sum",
        batch=lambda xs: np.exp(np.sum(xs, axis=1)),
    )


def _max(arity: int) -> SymmetricFunction:
    return SymmetricFunction.black_box(
        arity,
        lambda x: float(np.max(x)),
        name="max",
        batch=lambda xs: np.max(xs, axis=1),
    )


BUILTINS: dict[str, Callable[[int], SymmetricFunction]] = {
    "sum": power_sum,
    "product": product,
    "exp_sum": _exp_sum,
    "max": _max,
}


def builtin(name: str, arity: int) -> SymmetricFunction:
    """Resolve a builtin by name; `power_sum:k` selects x_1^k + ... + x_m^k."""
    if name.startswith("power_sum:"):
        return power_sum(arity, int(name.split(":", 1)[1]))
    if name not in BUILTINS:
        raise ValueError(f"unknown builtin {name!r}; expected one of {sorted(BUILTINS)} or power_sum:k")
    return BUILTINS[name](arity)
