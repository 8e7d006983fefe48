"""Block matrices [A_ab] with m x m blocks: PSD checks, spectral application, generators.

Assembly convention: block (a, b) occupies rows a*m .. a*m + m - 1 and the
matching columns of the nm x nm matrix (0-based).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from specpreserve.core.errors import DomainError, HermitianError
from specpreserve.core.linalg import (
    DEFAULT_PSD_TOL,
    HERMITIAN_TOL,
    HermitianMatrix,
    PsdVerdict,
    determinant,
    givens_unitary,
    is_psd,
)
from specpreserve.core.symfun import SymmetricFunction, eval_spectral
from specpreserve.core.util import make_rng

PRODUCT_HERMITIAN_TOL = 1e-9


def _defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T)))


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(a))))


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """n x n grid of m x m complex blocks with block(b, a) == block(a, b)*.

    Off-diagonal blocks may be arbitrary square matrices; the grid is
    symmetrized within HERMITIAN_TOL like HermitianMatrix.
    """

    blocks: np.ndarray

    def __post_init__(self) -> None:
        b = np.array(self.blocks, dtype=complex)
        if b.ndim != 4 or b.shape[0] != b.shape[1] or b.shape[2] != b.shape[3] or 0 in b.shape:
            raise ValueError(f"expected blocks of shape (n, n, m, m), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise DomainError("block matrix has non-finite entries")
        mirrored = b.transpose(1, 0, 3, 2).conj()
        defect = float(np.max(np.abs(b - mirrored)))
        if defect > HERMITIAN_TOL * _scale(b):
            raise HermitianError(f"block grid is not Hermitian (defect {defect:.3e})")
        b = 0.5 * (b + mirrored)
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence[np.ndarray]]) -> "BlockMatrix":
        return cls(np.array([[np.asarray(blk, dtype=complex) for blk in row] for row in grid]))

    @classmethod
    def from_assembled(cls, matrix: np.ndarray, m: int) -> "BlockMatrix":
        a = np.asarray(matrix, dtype=complex)
        if a.shape[0] % m:
            raise ValueError(f"assembled size {a.shape[0]} is not a multiple of m={m}")
        n = a.shape[0] // m
        return cls(a.reshape(n, m, n, m).transpose(0, 2, 1, 3))

    @property
    def n(self) -> int:
        return int(self.blocks.shape[0])

    @property
    def m(self) -> int:
        return int(self.blocks.shape[2])

    def block(self, a: int, b: int) -> np.ndarray:
        return self.blocks[a, b]

    def hermitian_block(self, a: int, b: int) -> HermitianMatrix:
        """Block (a, b) as a HermitianMatrix; raises HermitianError if it is not Hermitian."""
        try:
            return HermitianMatrix(self.blocks[a, b])
        except HermitianError as exc:
            raise HermitianError(f"block ({a},{b}) is not Hermitian: {exc}") from None

    @cached_property
    def assembled(self) -> HermitianMatrix:
        n, m = self.n, self.m
        return HermitianMatrix(self.blocks.transpose(0, 2, 1, 3).reshape(n * m, n * m))


def is_block_psd(mat: BlockMatrix, tol: float = DEFAULT_PSD_TOL) -> PsdVerdict:
    """PSD verdict of the assembled nm x nm matrix."""
    return is_psd(mat.assembled, tol)


def _spectral_grid(f: SymmetricFunction, grid: list[list[HermitianMatrix]], tol: float) -> HermitianMatrix:
    n = len(grid)
    out = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            out[a, b] = eval_spectral(f, grid[a][b], tol)
            out[b, a] = out[a, b]
    return HermitianMatrix(out)


def apply_spectral(f: SymmetricFunction, mat: BlockMatrix, tol: float = DEFAULT_PSD_TOL) -> HermitianMatrix:
    """
    Compute the n x n matrix [f(A_ab)].

    Block (b, a) is the adjoint of block (a, b) and has the conjugate spectrum,
    which is the same real spectrum for PSD blocks, so only the upper triangle
    is evaluated.

    Raises:
        DomainError: If a block is not Hermitian or not PSD within `tol`.
    """
    if mat.m != f.arity:
        raise ValueError(f"block size {mat.m} does not match arity {f.arity}")
    grid = [[mat.hermitian_block(a, b) if b >= a else None for b in range(mat.n)] for a in range(mat.n)]
    return _spectral_grid(f, grid, tol)


def block_det_matrix(mat: BlockMatrix) -> HermitianMatrix:
    """[det A_ab]; PSD whenever the block matrix is (the determinants form a principal
    submatrix of the m-th compound)."""
    n = mat.n
    out = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(a, n):
            blk = mat.block(a, b)
            if _defect(blk) <= HERMITIAN_TOL * _scale(blk):
                value: complex = determinant(HermitianMatrix(blk))
            else:
                value = complex(np.linalg.det(blk))
            out[a, b] = value
            out[b, a] = np.conj(value)
    return HermitianMatrix(out)


@dataclass(frozen=True, eq=False)
class BlockProduct:
    """Entrywise products A_ab B_ab with their admissibility verdict."""

    products: np.ndarray
    admissible: bool
    diagnostics: tuple[str, ...]
    tol: float

    @property
    def n(self) -> int:
        return int(self.products.shape[0])

    def matrix(self, a: int, b: int) -> HermitianMatrix:
        if not self.admissible:
            raise DomainError("block product is inadmissible: " + "; ".join(self.diagnostics))
        p = self.products[a, b]
        return HermitianMatrix(0.5 * (p + p.conj().T))

    def grid(self) -> list[list[HermitianMatrix]]:
        return [[self.matrix(a, b) for b in range(self.n)] for a in range(self.n)]


def block_product(ma: BlockMatrix, mb: BlockMatrix, tol: float = DEFAULT_PSD_TOL) -> BlockProduct:
    """
    Multiply blocks entrywise and decide admissibility.

    A product is admissible when it is Hermitian within PRODUCT_HERMITIAN_TOL
    (relative to its largest entry) and PSD within `tol`. Inadmissible
    products are reported, never repaired.

    Raises:
        ValueError: If n or m differ.
    """
    if (ma.n, ma.m) != (mb.n, mb.m):
        raise ValueError(f"shape mismatch: (n={ma.n}, m={ma.m}) vs (n={mb.n}, m={mb.m})")
    products = np.einsum("abij,abjk->abik", ma.blocks, mb.blocks)
    diagnostics: list[str] = []
    for a in range(ma.n):
        for b in range(ma.n):
            p = products[a, b]
            defect = _defect(p)
            if defect > PRODUCT_HERMITIAN_TOL * _scale(p):
                diagnostics.append(f"product ({a},{b}) is not Hermitian (defect {defect:.3e})")
                continue
            verdict = is_psd(HermitianMatrix(0.5 * (p + p.conj().T)), tol)
            if not verdict.is_psd:
                diagnostics.append(
                    f"product ({a},{b}) is not PSD (min eigenvalue {verdict.min_eigenvalue:.3e})"
                )
    products.setflags(write=False)
    return BlockProduct(products=products, admissible=not diagnostics, diagnostics=tuple(diagnostics), tol=tol)


def apply_spectral_product(f: SymmetricFunction, prod: BlockProduct) -> HermitianMatrix:
    """[f(A_ab B_ab)] for an admissible product."""
    if prod.products.shape[2] != f.arity:
        raise ValueError(f"block size {prod.products.shape[2]} does not match arity {f.arity}")
    grid = [[prod.matrix(a, b) if b >= a else None for b in range(prod.n)] for a in range(prod.n)]
    return _spectral_grid(f, grid, prod.tol)


def shift_blocks(mat: BlockMatrix, s: float) -> BlockMatrix:
    """Add s * I_m to every block; spectra of all blocks move by exactly s."""
    if s < 0.0:
        raise ValueError(f"shift must be >= 0, got {s}")
    return BlockMatrix(mat.blocks + s * np.eye(mat.m)[None, None, :, :])


# Generators


def gen_random_gram(n: int, m: int, rank: int, seed: int) -> BlockMatrix:
    """
    Random element of PSD_n(PSD_m) as X*X.

    X stacks `rank` row-blocks g_k^T (x) R_k with g_k in [0, 1)^n and complex
    Gaussian R_k, so block (a, b) = sum_k g_ka g_kb R_k* R_k is itself PSD.
    """
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    rng = make_rng(seed)
    rows = []
    for _ in range(rank):
        g = rng.random(n)
        r = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        rows.append(np.kron(g[None, :], r))
    x = np.vstack(rows)
    return BlockMatrix.from_assembled(x.conj().T @ x, m)


def gen_lemma4_family(x: Sequence[float], t: Sequence[float], a: np.ndarray) -> BlockMatrix:
    """
    Blocks diag(x_1 + t_1 a_1b a_1c, ..., x_m + t_m a_mb a_mc) for b, c = 1..n.

    Args:
        x: m nonnegative reals.
        t: m nonnegative reals.
        a: m x n array of positive reals.

    Raises:
        DomainError: On negative x or t, or non-positive a.
    """
    xv = np.asarray(x, dtype=float)
    tv = np.asarray(t, dtype=float)
    av = np.asarray(a, dtype=float)
    if av.ndim != 2 or xv.shape != (av.shape[0],) or tv.shape != (av.shape[0],):
        raise ValueError(f"shape mismatch: x {xv.shape}, t {tv.shape}, a {av.shape}")
    if np.any(xv < 0.0) or np.any(tv < 0.0):
        raise DomainError("x and t must be nonnegative")
    if np.any(av <= 0.0):
        raise DomainError("a must be positive")
    m, n = av.shape
    cols = av.T
    values = xv[None, None, :] + tv[None, None, :] * cols[:, None, :] * cols[None, :, :]
    blocks = np.zeros((n, n, m, m))
    idx = np.arange(m)
    blocks[:, :, idx, idx] = values
    return BlockMatrix(blocks)


def gen_commuting_pair(n: int, m: int, rank: int, seed: int) -> tuple[BlockMatrix, BlockMatrix]:
    """
    Two elements of PSD_n(PSD_m) whose blocks are all diagonal in one random
    unitary basis, so every product A_ab B_ab is PSD.
    """
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    rng = make_rng(seed)
    u = givens_unitary(m, rng)

    def draw() -> BlockMatrix:
        diag = np.zeros((n, n, m))
        for i in range(m):
            g = rng.random((rank, n))
            diag[:, :, i] = g.T @ g
        blocks = np.einsum("ij,abj,kj->abik", u, diag, u.conj())
        return BlockMatrix(blocks)

    return draw(), draw()


def identity_grid(n: int, m: int) -> BlockMatrix:
    """Every block I_m."""
    return BlockMatrix(np.broadcast_to(np.eye(m), (n, n, m, m)))


def diagonal_blocks(values: np.ndarray) -> BlockMatrix:
    """BlockMatrix whose block (a, b) is diag(values[a, b, :])."""
    v = np.asarray(values, dtype=float)
    n, _, m = v.shape
    blocks = np.zeros((n, n, m, m))
    idx = np.arange(m)
    blocks[:, :, idx, idx] = v
    return BlockMatrix(blocks)
