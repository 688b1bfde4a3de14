from fractions import Fraction

import numpy as np
import pytest

from cspref.polynomials import (
    MultilinearPolynomial,
    SymmetricSpec,
    half_sqrt_ok,
    huang_polynomial,
    huang_zeta_checks,
    library_separator,
    scale_polynomial,
    univariate_from_symmetric,
    verify_huang,
    verify_separating,
)
from cspref.predicates import all_points, named_predicate


def test_univariate_basis_cases():
    for k in (5, 9, 12):
        assert univariate_from_symmetric(SymmetricSpec(k, a=1)) == [0, 1, 0, 0, 0]
        assert univariate_from_symmetric(SymmetricSpec(k, b=1)) == [Fraction(-k, 2), 0, Fraction(1, 2), 0, 0]


@pytest.mark.parametrize("k", [25, 49, 81, 121])
def test_majority_univariate_matches_closed_form(k):
    r = int(round(k**0.5))
    spec = SymmetricSpec(k, Fraction(8, 27 * r), 0, Fraction(-5, 9 * k * r), Fraction(4, 3 * k * k))
    expect = [
        Fraction(1, 6) - Fraction(1, 3 * k),
        Fraction(31, 54 * r) - Fraction(5, 27 * k * r),
        Fraction(-1, 3 * k) + Fraction(4, 9 * k * k),
        Fraction(-5, 54 * k * r),
        Fraction(1, 18 * k * k),
    ]
    assert univariate_from_symmetric(spec) == expect


@pytest.mark.parametrize("k", [7, 12, 15])
def test_krawtchouk_identity_exhaustive(k):
    spec = SymmetricSpec(k, Fraction(3, 7), Fraction(-2, 5), Fraction(1, 3), Fraction(5, 11))
    nums, den = spec.to_multilinear().all_values_exact()
    weights = all_points(k).sum(axis=1)
    for s in range(-k, k + 1, 2):
        vals = {Fraction(int(v), den) for v in nums[weights == s]}
        assert vals == {spec.at_weight(s)}


def test_scale_polynomial():
    q = MultilinearPolynomial(3, {1: Fraction(1), 6: Fraction(-2)}, 2)
    q2, d = scale_polynomial(q, 1, -1)
    assert d == Fraction(1, 2)
    assert q2.coeffs == {1: Fraction(1, 2), 6: Fraction(-1)}
    _, d = scale_polynomial(q, 5 - Fraction(30, 7), -5)
    assert d == Fraction(1, 8)
    _, d = scale_polynomial(q, Fraction(1, 8), Fraction(-8, 9))
    assert d == Fraction(9, 73)
    with pytest.raises(ValueError):
        scale_polynomial(MultilinearPolynomial(3, {0: Fraction(1)}, 1), 1, -1)


def test_thr_minus1_separator():
    sep = library_separator("thr_minus1", 5)
    assert sep.delta == Fraction(6, 1176) == Fraction(1, 196)
    assert (sep.theta1, sep.theta0) == (1, -195)
    P = named_predicate("thr", k=5, theta=-1)
    assert verify_separating(P, sep.polynomial, sep.delta)
    # the explicit multilinear expansion agrees with the univariate route
    assert verify_separating(P, sep.polynomial.to_multilinear(), sep.delta)
    assert not verify_separating(P, sep.polynomial, sep.delta + Fraction(1, 1000))


@pytest.mark.parametrize("k", [7, 9, 11])
def test_thr_minus1_general_k(k):
    sep = library_separator("thr_minus1", k)
    assert sep.delta == Fraction(6, k**4 + 7 * k**3 - 13 * k**2 - k + 6)
    assert verify_separating(named_predicate("thr", k=k, theta=-1), sep.polynomial, sep.delta)


def test_majority_separator():
    for k in (25, 27, 51):
        sep = library_separator("maj", k)
        assert sep.delta == Fraction(9, 73)
        raw = sep.polynomial.scaled(sep.theta1 - sep.theta0)
        vals = {s: raw.at_weight(s) for s in raw.weights()}
        assert all(v > Fraction(1, 8) for s, v in vals.items() if s > 0)
        assert all(v > Fraction(-8, 9) for v in vals.values())
    sep = library_separator("maj", 25)
    assert verify_separating(named_predicate("maj", k=25), sep.polynomial, sep.delta)


def test_half_sqrt_separator():
    sep = library_separator("thr_halfsqrt", 99)
    assert sep.delta == Fraction(1, 225)
    raw = sep.polynomial.scaled(sep.theta1 - sep.theta0)
    ok = half_sqrt_ok(99)
    vals = {s: raw.at_weight(s) for s in raw.weights()}
    assert all(v > Fraction(1, 48) for s, v in vals.items() if ok(s))
    assert all(v >= Fraction(-14, 3) for v in vals.values())


def test_huang_structure():
    assert all(huang_zeta_checks().values())


def test_huang_kappa9():
    sep = library_separator("huang", 9)
    assert sep.delta == Fraction(1, 8)
    q = huang_polynomial(9)
    assert q.constant == 0 and q.degree == 4
    # each coefficient is a multiple of 1 / perm(9, 6) and the weights sum to 5
    assert sum(abs(v) for v in q.coeffs.values()) == 5
    report = verify_huang(9, sep.polynomial, sep.delta, samples=500)
    assert all(report.values()), report


def test_unknown_separator():
    with pytest.raises(ValueError):
        library_separator("nope", 5)
    with pytest.raises(ValueError):
        library_separator("maj", 23)


def test_polynomial_serialisation_and_evaluation():
    q = MultilinearPolynomial(4, {0b0011: Fraction(1, 3), 0b1000: Fraction(-2, 5)}, 2)
    back = MultilinearPolynomial.from_dict(q.to_dict())
    assert back.coeffs == q.coeffs
    z = all_points(4)
    exact = q.evaluate_exact(z)
    nums, den = q.all_values_exact()
    assert [Fraction(int(v), den) for v in nums] == exact
    assert np.allclose(q.evaluate(z), [float(v) for v in exact])
