from __future__ import annotations

import numpy as np
import pytest

from specpreserve.core import linalg
from specpreserve.core.errors import DomainError, EigenConvergenceError, HermitianError
from specpreserve.core.linalg import (
    HermitianMatrix,
    determinant,
    eigenvalues_hermitian,
    givens_unitary,
    hadamard,
    is_psd,
    random_psd,
)
from specpreserve.core.util import make_rng


def _random_hermitian(rng: np.random.Generator, dim: int) -> HermitianMatrix:
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianMatrix(x + x.conj().T)


@pytest.mark.parametrize(
    "entries, expected",
    [
        ([[3.0, 0.0], [0.0, 1.0]], [1.0, 3.0]),
        ([[2.0, 1.0], [1.0, 2.0]], [1.0, 3.0]),
        (np.eye(4), [1.0, 1.0, 1.0, 1.0]),
    ],
)
def test_eigenvalues_small_cases(entries, expected):
    values = eigenvalues_hermitian(HermitianMatrix(np.asarray(entries)))
    assert np.allclose(values, expected, atol=1e-12)


def test_eigenvalues_match_trace_and_determinant_on_random_input():
    rng = make_rng(11)
    for _ in range(200):
        dim = int(rng.integers(1, 9))
        a = _random_hermitian(rng, dim)
        values = eigenvalues_hermitian(a)
        assert values.shape == (dim,)
        assert np.all(np.diff(values) >= 0.0)
        assert abs(values.sum() - a.trace) <= 1e-8 * (1.0 + abs(a.trace))
        ref = float(np.real(np.linalg.det(a.entries)))
        assert abs(np.prod(values) - ref) <= 1e-8 * max(1.0, abs(ref))


def test_eigenvalues_agree_with_lapack():
    rng = make_rng(3)
    for dim in (2, 5, 8, 16):
        a = _random_hermitian(rng, dim)
        ref = np.linalg.eigvalsh(a.entries)
        assert np.allclose(eigenvalues_hermitian(a), ref, atol=1e-9 * np.linalg.norm(a.entries))


def test_spectrum_is_unitarily_invariant():
    rng = make_rng(5)
    for _ in range(20):
        dim = int(rng.integers(2, 7))
        a = _random_hermitian(rng, dim)
        u = givens_unitary(dim, rng)
        assert np.allclose(u.conj().T @ u, np.eye(dim), atol=1e-12)
        assert np.allclose(a.conjugate_by(u).spectrum, a.spectrum, atol=1e-8)


def test_custom_tolerance_and_bad_tolerance():
    a = HermitianMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(eigenvalues_hermitian(a, tol=1e-6), [1.0, 3.0], atol=1e-6)
    with pytest.raises(ValueError):
        eigenvalues_hermitian(a, tol=0.0)


def test_non_convergence_carries_residual(monkeypatch):
    monkeypatch.setattr(linalg, "MAX_SWEEPS", 0)
    a = HermitianMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    with pytest.raises(EigenConvergenceError) as exc:
        eigenvalues_hermitian(a, tol=1e-13)
    assert exc.value.residual > 0.0
    assert exc.value.sweeps == 0


def test_construction_symmetrizes_small_defects_and_rejects_large_ones():
    a = HermitianMatrix(np.array([[1.0, 1.0 + 1e-14], [1.0, 1.0]]))
    assert a.entries[0, 1] == a.entries[1, 0]
    with pytest.raises(HermitianError):
        HermitianMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DomainError):
        HermitianMatrix(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        HermitianMatrix(np.zeros((2, 3)))


def test_entries_are_read_only():
    a = HermitianMatrix.identity(2)
    with pytest.raises(ValueError):
        a.entries[0, 0] = 5.0


def test_reversal_reverses_a_diagonal():
    j = HermitianMatrix.reversal(3)
    d = HermitianMatrix.diag([1.0, 2.0, 3.0])
    assert np.allclose(d.conjugate_by(j.entries).entries, np.diag([3.0, 2.0, 1.0]))


@pytest.mark.parametrize(
    "entries, psd, lowest",
    [
        ([[1.0, 1.0], [1.0, 1.0]], True, 0.0),
        ([[1.0, 2.0], [2.0, 1.0]], False, -1.0),
    ],
)
def test_is_psd_small_cases(entries, psd, lowest):
    verdict = is_psd(HermitianMatrix(np.asarray(entries)))
    assert verdict.is_psd is psd
    assert verdict.min_eigenvalue == pytest.approx(lowest, abs=1e-12)
    assert verdict.is_psd == (verdict.min_eigenvalue >= -verdict.tolerance_used)


def test_is_psd_tolerance_scales_with_spectral_radius():
    big = HermitianMatrix.diag([1e6, -1e-4])
    verdict = is_psd(big)
    assert verdict.tolerance_used == pytest.approx(1e-3)
    assert verdict.is_psd
    assert not is_psd(HermitianMatrix.diag([1.0, -1e-6])).is_psd


def test_gram_matrices_are_psd():
    rng = make_rng(17)
    for _ in range(200):
        dim = int(rng.integers(1, 9))
        rank = int(rng.integers(1, dim + 1))
        assert is_psd(random_psd(dim, rng, rank=rank)).is_psd


def test_hadamard_cases():
    a = HermitianMatrix(np.array([[2.0, 1.0 + 1j], [1.0 - 1j, 3.0]]))
    ones = HermitianMatrix(np.ones((2, 2)))
    assert np.array_equal(hadamard(a, ones).entries, a.entries)
    out = hadamard(ones, HermitianMatrix.diag([2.0, 2.0]))
    assert np.array_equal(out.entries, np.diag([2.0, 2.0]))
    with pytest.raises(ValueError):
        hadamard(a, HermitianMatrix.identity(3))


def test_schur_product_keeps_psd():
    rng = make_rng(23)
    for _ in range(500):
        dim = int(rng.integers(1, 9))
        a = random_psd(dim, rng)
        b = random_psd(dim, rng, rank=int(rng.integers(1, dim + 1)))
        assert is_psd(hadamard(a, b)).min_eigenvalue >= -1e-8


@pytest.mark.parametrize(
    "entries, expected",
    [
        (np.eye(3), 1.0),
        (np.diag([2.0, 5.0]), 10.0),
        (np.array([[2.0, 1.0], [1.0, 2.0]]), 3.0),
    ],
)
def test_determinant(entries, expected):
    assert determinant(HermitianMatrix(entries)) == pytest.approx(expected, rel=1e-12)
