import itertools
from fractions import Fraction

import numpy as np
import pytest

from cspref.predicates import (
    Predicate,
    all_points,
    huang_arity,
    index_to_z,
    named_predicate,
    parse_predicate_spec,
    predicate_from_truth_table,
    walsh_hadamard,
    z_to_index,
    zero_variability,
)


def exact_fourier(pred):
    """Direct O(4^k) transform, used as an oracle for the fast one."""
    pts = all_points(pred.k).astype(int)
    out = {}
    for mask in range(1 << pred.k):
        chi = np.prod(pts[:, [j for j in range(pred.k) if mask >> j & 1]], axis=1)
        out[mask] = Fraction(int((chi * pred.table).sum()), 1 << pred.k)
    return out


def test_index_encoding_roundtrip():
    idx = np.arange(32)
    z = index_to_z(idx, 5)
    assert np.all(z[0] == 1)
    assert z[1, 0] == -1 and np.all(z[1, 1:] == 1)
    assert np.array_equal(z_to_index(z), idx)


def test_dictator():
    P = predicate_from_truth_table(1, [1, 0])
    assert P(np.array([1])) == 1 and P(np.array([-1])) == 0


def test_two_xor_from_table():
    # (1 - z1 z2) / 2
    bits = [(1 - z[0] * z[1]) // 2 for z in all_points(2).astype(int)]
    P = predicate_from_truth_table(2, bits)
    assert P == named_predicate("xor", k=2)
    f = P.fourier
    assert f.coefficient(0) == Fraction(1, 2)
    assert f.coefficient(0b11) == Fraction(-1, 2)
    assert f.coefficient(0b01) == 0 and f.coefficient(0b10) == 0


def test_all_ones_is_trivial():
    P = predicate_from_truth_table(3, [1] * 8)
    assert P.is_trivial
    assert P.fourier.coefficient(0) == 1
    assert all(P.fourier.coefficient(m) == 0 for m in range(1, 8))


def test_bad_tables_rejected():
    with pytest.raises(ValueError):
        predicate_from_truth_table(2, [1, 0, 1])
    with pytest.raises(ValueError):
        predicate_from_truth_table(2, [1, 0, 2, 0])
    with pytest.raises(ValueError):
        named_predicate("thr", k=4, theta=0)


def test_majority_three():
    P = named_predicate("maj", k=3)
    pts = all_points(3)
    assert np.array_equal(P.table.astype(bool), pts.sum(axis=1) >= 1)
    assert P.n_satisfying == 4
    f = P.fourier
    assert f.coefficient(0) == Fraction(1, 2)
    for j in range(3):
        assert f.coefficient(1 << j) == Fraction(1, 4)
    assert f.coefficient(0b111) == Fraction(-1, 4)
    assert all(f.coefficient(m) == 0 for m in (0b011, 0b101, 0b110))


def test_thr5_minus1_is_two_out_of_five():
    P = named_predicate("thr", k=5, theta=-1)
    plus = (all_points(5) == 1).sum(axis=1)
    assert np.array_equal(P.table.astype(bool), plus >= 2)


def test_huang_arity():
    assert huang_arity(4) == 8
    assert named_predicate("huang", kappa=4).k == 8


@pytest.mark.parametrize("k", [2, 3, 5])
def test_means(k):
    assert named_predicate("xor", k=k).mean() == Fraction(1, 2)
    assert named_predicate("or", k=k).mean() == Fraction((1 << k) - 1, 1 << k)
    if k % 2:
        assert named_predicate("maj", k=k).mean() == Fraction(1, 2)


def test_zero_variability():
    for k in (2, 3, 4, 5):
        assert zero_variability(named_predicate("or", k=k)) == k
    for k in (3, 5, 7):
        assert zero_variability(named_predicate("maj", k=k)) == (k + 1) // 2
    assert zero_variability(named_predicate("xor", k=2)) == 2


def test_trivial_threshold():
    for k in (3, 5, 7):
        assert named_predicate("thr", k=k, theta=-k).n_satisfying == 1 << k


@pytest.mark.parametrize("seed", range(5))
def test_fourier_roundtrip_and_parseval(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 8))
    P = predicate_from_truth_table(k, rng.integers(0, 2, size=1 << k))
    f = P.fourier
    oracle = exact_fourier(P)
    assert all(f.coefficient(m) == oracle[m] for m in range(1 << k))
    assert [int(v) for v in f.evaluate_exact()] == [int(b) for b in P.table]
    # Parseval for a 0/1 function: sum P_hat^2 = E[P^2] = E[P]
    assert sum(c * c for c in oracle.values()) == P.mean()


def test_fourier_roundtrip_named_up_to_16():
    for P in (named_predicate("maj", k=15), named_predicate("nae", k=16), named_predicate("or", k=12)):
        vals = P.fourier.evaluate_exact()
        assert all(int(v) == int(b) for v, b in zip(vals, P.table))


def test_walsh_hadamard_matches_definition():
    vals = np.arange(8, dtype=np.int64)
    out = walsh_hadamard(vals)
    pts = all_points(3).astype(int)
    for mask in range(8):
        chi = np.prod(pts[:, [j for j in range(3) if mask >> j & 1]], axis=1)
        assert out[mask] == int((chi * vals).sum())


def test_huang_membership():
    kappa = 4
    P = named_predicate("huang", kappa=kappa)
    rng = np.random.default_rng(1)
    triples = list(itertools.combinations(range(kappa), 3))
    for _ in range(20):
        y = rng.choice([-1, 1], size=kappa)
        strong = np.concatenate([y, [y[a] * y[b] * y[c] for a, b, c in triples]])
        assert P(strong) == 1
        z = strong.copy()
        z[rng.choice(P.k, size=kappa, replace=False)] *= -1
        assert P(z) == 1


def test_serialisation_roundtrip():
    P = named_predicate("thr", k=5, theta=-1)
    assert Predicate.from_dict(P.to_dict()) == P
    rng = np.random.default_rng(3)
    Q = predicate_from_truth_table(5, rng.integers(0, 2, size=32), name="rand")
    d = Q.to_dict()
    assert len(d["table"]) == 8
    assert Predicate.from_dict(d) == Q


def test_parse_spec():
    assert parse_predicate_spec("xor:3") == named_predicate("xor", k=3)
    assert parse_predicate_spec("thr:5,-1") == named_predicate("thr", k=5, theta=-1)
    assert parse_predicate_spec("huang:4").k == 8
    with pytest.raises(ValueError):
        parse_predicate_spec("xor")
