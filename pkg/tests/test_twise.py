import math
from fractions import Fraction

import numpy as np
import pytest

from cspref.polynomials import MultilinearPolynomial, verify_separating
from cspref.predicates import all_points, named_predicate, predicate_from_truth_table
from cspref.twise import (
    exceeds_granularity,
    granularity_bound,
    granularity_exact,
    granularity_K,
    masks_up_to,
    twise_distance,
)


def moment(primal, k, mask):
    pts = all_points(k).astype(int)
    cols = [j for j in range(k) if mask >> j & 1]
    return sum(v * int(np.prod(pts[i, cols])) for i, v in primal.items())


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_xor_full_independence(k):
    P = named_predicate("xor", k=k)
    assert twise_distance(P, k).delta == Fraction(1, 2)
    assert twise_distance(P, k, method="simplex").delta == Fraction(1, 2)
    assert twise_distance(P, k - 1).delta == 0


def test_three_or_pairwise_supported():
    P = named_predicate("or", k=3)
    res = twise_distance(P, 2)
    assert res.delta == 0 and res.status == "supporting"
    assert all(P.table[i] for i in res.primal)
    for mask in masks_up_to(3, 2):
        assert moment(res.primal, 3, mask) == 0
    assert twise_distance(P, 3).delta == Fraction(1, 8)


def test_majority_three():
    P = named_predicate("maj", k=3)
    res = twise_distance(P, 2)
    # the best pairwise-uniform distribution places 1 - 1/(k+1) = 3/4 on Maj^{-1}(1)
    assert res.delta == Fraction(1, 4)
    assert verify_separating(P, res.dual, res.delta)
    assert twise_distance(P, 3).delta == Fraction(1, 2)


@pytest.mark.parametrize("seed", range(6))
def test_duality_and_checks_random(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3, 7))
    P = predicate_from_truth_table(k, (rng.random(1 << k) < 0.55).astype(int))
    if P.is_trivial:
        pytest.skip("constant table")
    prev = Fraction(0)
    for t in range(1, k + 1):
        res = twise_distance(P, t, method="simplex")
        checks = res.check(P)
        assert all(checks.values()), checks
        # delta is nondecreasing in t
        assert res.delta >= prev
        prev = res.delta
        if res.delta > 0:
            assert res.dual.constant == 0 and res.dual.degree <= t


@pytest.mark.parametrize("k", range(2, 11))
def test_full_independence_shortcut(k):
    rng = np.random.default_rng(100 + k)
    P = predicate_from_truth_table(k, (rng.random(1 << k) < 0.7).astype(int))
    fast = twise_distance(P, k)
    assert fast.method == "uniform"
    assert fast.delta == Fraction((1 << k) - P.n_satisfying, 1 << k)
    if k <= 7:
        assert twise_distance(P, k, method="simplex").delta == fast.delta
    assert verify_separating(P, fast.dual, fast.delta)


def test_thr5_minus1_values():
    P = named_predicate("thr", k=5, theta=-1)
    assert twise_distance(P, 2).delta == 0
    res = twise_distance(P, 3)
    assert res.delta == Fraction(1, 16) >= Fraction(1, 196)
    assert all(res.check(P).values())


def test_seven_ary_threshold_probe():
    # support probe at k = 7, t = 4
    assert twise_distance(named_predicate("thr", k=7, theta=-5), 4).delta == 0
    assert twise_distance(named_predicate("thr", k=7, theta=-3), 4).delta == Fraction(1, 80)


def test_huang_kappa4_table_mode():
    P = named_predicate("huang", kappa=4)
    res = twise_distance(P, 4)
    assert res.k == 8
    assert all(res.check(P).values())
    assert res.delta == 0


def test_granularity_examples():
    assert granularity_K(2, 2) == 4
    assert granularity_bound(2, 2) == pytest.approx(1 / 16)
    assert granularity_exact(2, 2) == Fraction(1, 16)
    assert granularity_K(3, 2) == 7
    assert granularity_bound(3, 2) == pytest.approx(7**-3.5)
    assert granularity_exact(3, 2) is None
    assert exceeds_granularity(Fraction(1, 16), 2, 2)
    assert not exceeds_granularity(Fraction(1, 17), 2, 2)


def test_degenerate_separator():
    P = named_predicate("or", k=3)
    assert verify_separating(P, MultilinearPolynomial(3, {}, 1), 0)


def test_lp_rejects_bad_arguments():
    P = named_predicate("or", k=3)
    with pytest.raises(ValueError):
        twise_distance(P, 0)
    with pytest.raises(ValueError):
        twise_distance(P, 2, method="uniform")


def test_result_serialises():
    d = twise_distance(named_predicate("maj", k=3), 2).to_dict()
    assert d["delta"] == "1/4" and d["status"] == "delta_far"
    back = MultilinearPolynomial.from_dict(d["dual_polynomial"])
    assert verify_separating(named_predicate("maj", k=3), back, Fraction(1, 4))
