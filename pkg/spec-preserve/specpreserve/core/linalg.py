"""Dense Hermitian linear algebra: Jacobi spectra, PSD verdicts, Hadamard products.

All matrices are small (dim <= 64), so the eigensolver is a plain cyclic
Jacobi iteration on complex Hermitian input rather than a LAPACK call; numpy
only supplies storage and the row/column updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from specpreserve.core.errors import DomainError, EigenConvergenceError, HermitianError

DEFAULT_EIG_TOL = 1e-12
DEFAULT_PSD_TOL = 1e-9
HERMITIAN_TOL = 1e-12
MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Square complex Hermitian matrix, immutable once built.

    Input within HERMITIAN_TOL (scaled by the largest entry) of Hermitian is
    symmetrized by averaging with its conjugate transpose; anything further
    off raises HermitianError.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(a))))
        defect = float(np.max(np.abs(a - a.conj().T)))
        if defect > HERMITIAN_TOL * scale:
            raise HermitianError(f"matrix is not Hermitian (defect {defect:.3e})")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def identity(cls, dim: int) -> "HermitianMatrix":
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def reversal(cls, dim: int) -> "HermitianMatrix":
        """The anti-diagonal permutation matrix J."""
        return cls(np.fliplr(np.eye(dim)))

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.entries.imag == 0.0))

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues at DEFAULT_EIG_TOL, ascending, computed once."""
        values, _, _ = _jacobi(self.entries, DEFAULT_EIG_TOL)
        values.setflags(write=False)
        return values

    def conjugate_by(self, u: np.ndarray) -> "HermitianMatrix":
        """Return U* A U."""
        u = np.asarray(u, dtype=complex)
        return HermitianMatrix(u.conj().T @ self.entries @ u)

    def shifted(self, s: float) -> "HermitianMatrix":
        """Return A + s I."""
        return HermitianMatrix(self.entries + s * np.eye(self.dim))


@dataclass(frozen=True)
class PsdVerdict:
    """PSD decision for one matrix; is_psd <=> min_eigenvalue >= -tolerance_used."""

    is_psd: bool
    min_eigenvalue: float
    tolerance_used: float


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _rotate(a: np.ndarray, p: int, q: int, g: float) -> None:
    # Zero a[p, q] with a complex rotation; g = |a[p, q]| > 0.
    app = a[p, p].real
    aqq = a[q, q].real
    phase = a[p, q] / g
    tau = (aqq - app) / (2.0 * g)
    t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    rot = np.array([[c, s * phase], [-s * np.conj(phase), c]], dtype=complex)
    idx = [p, q]
    a[:, idx] = a[:, idx] @ rot
    a[idx, :] = rot.conj().T @ a[idx, :]
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real


def _jacobi(entries: np.ndarray, tol: float) -> tuple[np.ndarray, float, int]:
    """Cyclic threshold Jacobi; returns (ascending eigenvalues, residual, sweeps)."""
    a = np.array(entries, dtype=complex)
    m = a.shape[0]
    target = tol * float(np.linalg.norm(a))
    off = _off_norm(a)
    for sweep in range(MAX_SWEEPS):
        if off <= target:
            return np.sort(np.real(np.diag(a))), off, sweep
        # Numerical Recipes threshold: skip small pivots during the first sweeps.
        threshold = 0.2 * off / (m * m) if sweep < 3 else 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                g = abs(a[p, q])
                if g == 0.0 or g < threshold:
                    continue
                _rotate(a, p, q, g)
        off = _off_norm(a)
    if off <= target:
        return np.sort(np.real(np.diag(a))), off, MAX_SWEEPS
    raise EigenConvergenceError(off, MAX_SWEEPS)


def eigenvalues_hermitian(a: HermitianMatrix, tol: float = DEFAULT_EIG_TOL) -> np.ndarray:
    """
    Compute the spectrum of a Hermitian matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm is at most `tol` times the
    Frobenius norm of `a`.

    Args:
        a: Hermitian input.
        tol: Relative convergence threshold, > 0.

    Returns:
        np.ndarray: `a.dim` real eigenvalues, ascending, with multiplicity.

    Raises:
        ValueError: If tol is not positive.
        EigenConvergenceError: If MAX_SWEEPS sweeps do not reach the threshold;
            carries the final residual.
    """
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if tol == DEFAULT_EIG_TOL:
        return a.spectrum
    values, _, _ = _jacobi(a.entries, tol)
    return values


def is_psd(a: HermitianMatrix, tol: float = DEFAULT_PSD_TOL) -> PsdVerdict:
    """PSD iff min eigenvalue >= -tol * max(1, spectral radius)."""
    values = eigenvalues_hermitian(a)
    radius = float(np.max(np.abs(values)))
    used = tol * max(1.0, radius)
    lowest = float(values[0])
    return PsdVerdict(is_psd=lowest >= -used, min_eigenvalue=lowest, tolerance_used=used)


def hadamard(a: HermitianMatrix, b: HermitianMatrix) -> HermitianMatrix:
    """Entrywise (Schur) product."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return HermitianMatrix(a.entries * b.entries)


def determinant(a: HermitianMatrix) -> float:
    """Product of the eigenvalues."""
    return float(np.prod(eigenvalues_hermitian(a)))


def givens_unitary(dim: int, rng: np.random.Generator, rotations: int | None = None) -> np.ndarray:
    """Random unitary built as a product of complex Givens rotations and a diagonal phase."""
    u = np.diag(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, size=dim)))
    count = rotations if rotations is not None else 2 * dim * dim
    for _ in range(count if dim > 1 else 0):
        p, q = (int(i) for i in rng.choice(dim, size=2, replace=False))
        theta = rng.uniform(0.0, 2.0 * math.pi)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(theta), math.sin(theta)
        g = np.eye(dim, dtype=complex)
        g[p, p] = c
        g[q, q] = c
        g[p, q] = s * np.exp(1j * phi)
        g[q, p] = -s * np.exp(-1j * phi)
        u = u @ g
    return u


def random_psd(dim: int, rng: np.random.Generator, rank: int | None = None) -> HermitianMatrix:
    """X*X for a standard complex Gaussian X of shape (rank, dim)."""
    rows = rank if rank is not None else dim
    x = rng.standard_normal((rows, dim)) + 1j * rng.standard_normal((rows, dim))
    return HermitianMatrix(x.conj().T @ x)
