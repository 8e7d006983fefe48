from __future__ import annotations

import math

import numpy as np
import pytest

from specpreserve.core.errors import DomainError
from specpreserve.core.linalg import HermitianMatrix, random_psd
from specpreserve.core.symfun import (
    MultiIndex,
    MultiIndexSet,
    SymmetricFunction,
    builtin,
    check_symmetry,
    constant,
    eval_point,
    eval_spectral,
    exp_sum_series,
    is_diagonal_form,
    orbit,
    power_sum,
    product,
)
from specpreserve.core.types import Verdict
from specpreserve.core.util import make_rng

SUM_MINUS_3PROD = {(1, 0): 1.0, (0, 1): 1.0, (1, 1): -3.0}


def test_multi_index_basics():
    idx = MultiIndex((0, 2, 1))
    assert idx.arity == 3
    assert idx.degree == 3
    assert idx.support == 2
    assert idx.canonical() == MultiIndex((2, 1, 0))
    assert idx.factorial() == 2
    assert not idx.is_diagonal
    assert MultiIndex((2, 2)).is_diagonal
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_con_p_members_and_order():
    con = MultiIndexSet(2, 2)
    assert len(con) == 6
    assert [i.exponents for i in con][:3] == [(0, 0), (0, 1), (1, 0)]
    assert con.position(MultiIndex((1, 1))) == 4
    assert MultiIndex((2, 0)) in con
    assert MultiIndex((2, 1)) not in con
    assert MultiIndex((1,)) not in con
    assert len(MultiIndexSet(3, 2)) == math.comb(5, 3)


def test_orbit_lists_distinct_permutations():
    assert orbit((1, 0)) == ((0, 1), (1, 0))
    assert orbit((2, 2)) == ((2, 2),)
    assert len(orbit((2, 1, 0))) == 6


def test_asymmetric_coefficients_are_rejected():
    with pytest.raises(DomainError):
        SymmetricFunction.series(2, {(1, 0): 1.0})
    with pytest.raises(DomainError):
        SymmetricFunction.series(2, {(1, 0): 1.0, (0, 1): 2.0})
    with pytest.raises(DomainError):
        SymmetricFunction.series(2, {(1, 0): 1.0, (0, 1): 2.0}, orbits=True)


def test_truncation_degree_is_metadata():
    f = SymmetricFunction.series(2, {(1, 1): 1.0}, degree=5, orbits=True)
    assert f.body.degree == 5
    with pytest.raises(ValueError):
        SymmetricFunction.series(2, {(2, 1): 1.0}, degree=2, orbits=True)


@pytest.mark.parametrize(
    "f, x, expected",
    [
        (constant(2, 1.0), (0.3, 7.0), 1.0),
        (product(2), (2.0, 3.0), 6.0),
        (SymmetricFunction.diagonal(2, [1.0, 1.0]), (2.0, 2.0), 5.0),
        (SymmetricFunction.series(2, SUM_MINUS_3PROD), (1.0, 2.0), -3.0),
        (power_sum(3, 2), (1.0, 2.0, 3.0), 14.0),
    ],
)
def test_eval_point(f, x, expected):
    assert eval_point(f, x) == pytest.approx(expected, rel=1e-15)


def test_series_evaluation_is_bitwise_permutation_invariant():
    f = exp_sum_series(3, 4)
    rng = make_rng(1)
    for _ in range(50):
        x = rng.random(3)
        assert f(x) == f(x[rng.permutation(3)])


def test_eval_point_domain_errors():
    f = power_sum(2)
    with pytest.raises(ValueError):
        eval_point(f, (1.0,))
    with pytest.raises(DomainError):
        eval_point(f, (1.0, -0.5))
    with pytest.raises(DomainError):
        eval_point(builtin("max", 2), (-1.0, 0.0))


def test_eval_spectral_examples():
    assert eval_spectral(power_sum(2), HermitianMatrix.diag([1.0, 2.0])) == pytest.approx(3.0)
    a = HermitianMatrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert eval_spectral(product(2), a) == pytest.approx(3.0, rel=1e-12)
    assert eval_spectral(constant(2, 4.5), a) == 4.5


def test_eval_spectral_is_unitarily_invariant():
    rng = make_rng(9)
    f = SymmetricFunction.series(3, {(2, 1, 0): 0.5, (1, 1, 1): 2.0, (0, 0, 0): 1.0}, orbits=True)
    for _ in range(20):
        a = random_psd(3, rng)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
        assert eval_spectral(f, a.conjugate_by(q)) == pytest.approx(eval_spectral(f, a), rel=1e-8)


def test_eval_spectral_clamps_round_off_and_rejects_negative_spectra():
    f = power_sum(2)
    assert eval_spectral(f, HermitianMatrix.diag([1.0, -1e-13])) == 1.0
    with pytest.raises(DomainError):
        eval_spectral(f, HermitianMatrix.diag([1.0, -0.5]))
    with pytest.raises(ValueError):
        eval_spectral(f, HermitianMatrix.identity(3))


def test_check_symmetry_series_needs_no_samples():
    report = check_symmetry(SymmetricFunction.series(2, SUM_MINUS_3PROD))
    assert report.verdict is Verdict.CERTIFIED
    assert report.details["samples_used"] == 0


def test_check_symmetry_black_boxes():
    prod_box = SymmetricFunction.black_box(2, lambda x: float(x[0] * x[1]))
    report = check_symmetry(prod_box, samples=50, seed=3)
    assert report.certified
    assert report.details["max_deviation"] == 0.0

    first = SymmetricFunction.black_box(2, lambda x: float(x[0]))
    report = check_symmetry(first, samples=50, seed=3)
    assert report.falsified
    assert report.witness["x"] == [1.0, 0.0]
    assert report.witness["permutation"] == [1, 0]

    with pytest.raises(ValueError):
        check_symmetry(first, samples=0)


@pytest.mark.parametrize(
    "coeffs, expected",
    [
        ({(0, 0): 1.0, (1, 1): 1.0}, (True, None)),
        ({(1, 0): 1.0, (0, 1): 1.0}, (False, MultiIndex((1, 0)))),
        ({(2, 2): 3.5}, (True, None)),
    ],
)
def test_is_diagonal_form(coeffs, expected):
    assert is_diagonal_form(SymmetricFunction.series(2, coeffs)) == expected


def test_is_diagonal_form_tolerance_and_black_box():
    f = SymmetricFunction.series(2, {(1, 1): 1.0, (1, 0): 1e-14, (0, 1): 1e-14})
    assert is_diagonal_form(f, tol=1e-12) == (True, None)
    assert is_diagonal_form(SymmetricFunction.diagonal(3, [0.0, 2.0])) == (True, None)
    with pytest.raises(TypeError):
        is_diagonal_form(builtin("max", 2))


def test_builtins():
    assert builtin("sum", 3)((1.0, 2.0, 3.0)) == 6.0
    assert builtin("power_sum:3", 2)((1.0, 2.0)) == 9.0
    assert builtin("exp_sum", 2)((0.5, 0.5)) == pytest.approx(math.e)
    assert builtin("max", 2).kind == "black_box"
    with pytest.raises(ValueError):
        builtin("median", 2)


def test_exp_sum_truncation_coefficients():
    f = exp_sum_series(2, 6)
    assert f.body.coefficient((3, 3)) == pytest.approx(1.0 / 36.0)
    assert f.body.coefficient((0, 6)) == pytest.approx(1.0 / 720.0)
    assert f.body.coefficient((4, 3)) == 0.0
    assert len(f.body.orbits) == 16


def test_diagonal_series_is_a_polynomial_in_the_determinant():
    rng = make_rng(21)
    b = [1.0, 0.5, 0.25]
    for dim in (2, 3):
        f = SymmetricFunction.diagonal(dim, b)
        for _ in range(20):
            a = random_psd(dim, rng)
            det = float(np.prod(a.spectrum))
            expected = b[0] + b[1] * det + b[2] * det * det
            assert eval_spectral(f, a) == pytest.approx(expected, rel=1e-8, abs=1e-12)
