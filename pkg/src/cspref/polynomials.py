"""Multilinear polynomials on {-1,1}^k and separating-polynomial checks.

A polynomial Q delta-separates P when Q >= delta - 1 everywhere,
Q >= delta on P^{-1}(1), and Q has no constant term.  Small arities are
checked exhaustively; symmetric polynomials of any odd arity are checked
through their univariate form in the Hamming weight S_z = sum(z).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb, lcm

import numpy as np

from .predicates import Predicate, huang_arity, huang_triples, walsh_hadamard
from .surd import Surd, exact

__all__ = [
    "HUANG_ZETA",
    "LibrarySeparator",
    "MultilinearPolynomial",
    "SymmetricSpec",
    "huang_polynomial",
    "huang_theta1",
    "huang_zeta_checks",
    "strongly_satisfying",
    "verify_huang",
    "library_separator",
    "scale_polynomial",
    "univariate_from_symmetric",
    "verify_separating",
]

EXHAUSTIVE_MAX_K = 24


class MultilinearPolynomial:
    """Sparse multilinear polynomial sum_S Q_hat(S) z^S, S given as a bitmask."""

    def __init__(self, k: int, coeffs: dict[int, Fraction] | None = None, t: int | None = None):
        self.k = k
        self.coeffs = {int(m): exact(v) for m, v in (coeffs or {}).items() if v != 0}
        for mask in self.coeffs:
            if mask < 0 or mask >> k:
                raise ValueError(f"monomial {mask:#x} outside [k]")
        degree = max((bin(m).count("1") for m in self.coeffs), default=0)
        self.t = degree if t is None else t
        if degree > self.t:
            raise ValueError(f"degree {degree} exceeds bound {self.t}")

    def __repr__(self):
        return f"MultilinearPolynomial(k={self.k}, t={self.t}, terms={len(self.coeffs)})"

    @property
    def constant(self) -> Fraction:
        return Fraction(self.coeffs.get(0, 0))

    @property
    def degree(self) -> int:
        return max((bin(m).count("1") for m in self.coeffs), default=0)

    def coefficient(self, mask: int):
        return self.coeffs.get(mask, Fraction(0))

    def scaled(self, factor) -> MultilinearPolynomial:
        return MultilinearPolynomial(self.k, {m: v * factor for m, v in self.coeffs.items()}, self.t)

    @cached_property
    def _terms(self):
        masks = list(self.coeffs)
        width = max((bin(m).count("1") for m in masks), default=0)
        vars_ = np.full((len(masks), max(width, 1)), -1, dtype=np.int64)
        for row, mask in enumerate(masks):
            idx = [j for j in range(self.k) if mask >> j & 1] if self.k <= 64 else _bits(mask)
            vars_[row, :len(idx)] = idx
        return masks, vars_

    def evaluate(self, z) -> np.ndarray:
        """Float values at the rows of z."""
        z = np.atleast_2d(np.asarray(z, dtype=np.int64))
        masks, vars_ = self._terms
        if not masks:
            return np.zeros(z.shape[0])
        coef = np.array([float(self.coeffs[m]) for m in masks])
        return np.concatenate([self._monomials(block, vars_) @ coef for block in self._row_blocks(z)])

    def evaluate_exact(self, z) -> list[Fraction]:
        """Exact values at the rows of z (coefficients must be rational)."""
        z = np.atleast_2d(np.asarray(z, dtype=np.int64))
        masks, vars_ = self._terms
        if not masks:
            return [Fraction(0)] * z.shape[0]
        coeffs = [Fraction(self.coeffs[m]) for m in masks]
        den = lcm(*(c.denominator for c in coeffs))
        ints = [c.numerator * (den // c.denominator) for c in coeffs]
        small = sum(abs(v) for v in ints) < 2**62
        nums = np.array(ints, dtype=np.int64 if small else object)
        out: list[Fraction] = []
        for block in self._row_blocks(z):
            mono = self._monomials(block, vars_)
            vals = mono @ nums if small else mono.astype(object) @ nums
            out.extend(Fraction(int(v), den) for v in vals)
        return out

    def _row_blocks(self, z: np.ndarray, budget: int = 1 << 22):
        step = max(1, budget // max(1, len(self.coeffs)))
        for lo in range(0, z.shape[0], step):
            yield z[lo:lo + step]

    @staticmethod
    def _monomials(z: np.ndarray, vars_: np.ndarray) -> np.ndarray:
        padded = np.concatenate([z, np.ones((z.shape[0], 1), dtype=z.dtype)], axis=1).astype(np.int8)
        return padded[:, vars_].prod(axis=2, dtype=np.int64)  # index -1 hits the padding column

    def all_values_exact(self) -> tuple[np.ndarray, int]:
        """Integer numerators of Q on all 2^k points (index order) and their denominator."""
        if self.k > EXHAUSTIVE_MAX_K:
            raise ValueError("exhaustive evaluation needs k <= 24")
        coeffs = {m: Fraction(v) for m, v in self.coeffs.items()}
        den = lcm(*(c.denominator for c in coeffs.values())) if coeffs else 1
        big = max((abs(c.numerator) * (den // c.denominator) for c in coeffs.values()), default=0)
        dtype = np.int64 if big * len(coeffs) < 2**62 else object
        vec = np.zeros(1 << self.k, dtype=dtype)
        for m, c in coeffs.items():
            vec[m] = c.numerator * (den // c.denominator)
        return walsh_hadamard(vec), den

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "t": self.t,
            "coeffs": {f"{m:x}": _frac_str(v) for m, v in sorted(self.coeffs.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> MultilinearPolynomial:
        coeffs = {int(key, 16): Fraction(val) for key, val in data["coeffs"].items()}
        return cls(int(data["k"]), coeffs, int(data["t"]))


def _bits(mask: int) -> list[int]:
    out, j = [], 0
    while mask:
        if mask & 1:
            out.append(j)
        mask >>= 1
        j += 1
    return out


def _frac_str(v) -> str:
    v = exact(v)
    if isinstance(v, Surd):
        raise ValueError("irrational coefficients cannot be serialised as num/den")
    return f"{v.numerator}/{v.denominator}"


# --- symmetric polynomials ---------------------------------------------------


@dataclass(frozen=True)
class SymmetricSpec:
    """Q(z) = a e_1(z) + b e_2(z) + c e_3(z) + d e_4(z) with e_j the elementary symmetric sums."""

    k: int
    a: object = Fraction(0)
    b: object = Fraction(0)
    c: object = Fraction(0)
    d: object = Fraction(0)

    @property
    def levels(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    @property
    def degree(self) -> int:
        return max((j + 1 for j, v in enumerate(self.levels) if v != 0), default=0)

    def coefficient(self, mask: int):
        size = bin(mask).count("1")
        return self.levels[size - 1] if 1 <= size <= 4 else Fraction(0)

    def scaled(self, factor) -> SymmetricSpec:
        return SymmetricSpec(self.k, *(exact(v * factor) for v in self.levels))

    def univariate(self) -> list:
        return univariate_from_symmetric(self)

    def at_weight(self, s: int):
        return _horner(self.univariate(), s)

    def weights(self) -> range:
        return range(-self.k, self.k + 1, 2)

    def to_multilinear(self) -> MultilinearPolynomial:
        if self.k > EXHAUSTIVE_MAX_K:
            raise ValueError("explicit expansion needs k <= 24")
        coeffs = {}
        for size, val in enumerate(self.levels, start=1):
            if val == 0 or size > self.k:
                continue
            val = exact(val)
            if isinstance(val, Surd):
                raise ValueError("irrational coefficients; use the univariate route")
            for subset in itertools.combinations(range(self.k), size):
                coeffs[sum(1 << j for j in subset)] = val
        return MultilinearPolynomial(self.k, coeffs, max(self.degree, 1))


def _horner(poly: list, s):
    acc = Fraction(0)
    for coef in reversed(poly):
        acc = acc * s + coef
    return exact(acc)


def univariate_from_symmetric(spec: SymmetricSpec) -> list:
    """Coefficients [c0, c1, c2, c3, c4] with Q(z) = sum_i c_i S_z^i.

    Obtained by writing each elementary symmetric sum as a Krawtchouk
    polynomial in (k - S_z)/2.
    """
    k = spec.k
    a, b, c, d = spec.levels
    c4 = d * Fraction(1, 24)
    c3 = c * Fraction(1, 6)
    c2 = b * Fraction(1, 2) + d * Fraction(1, 3) - d * Fraction(k, 4)
    c1 = a + c * Fraction(-3 * k + 2, 6)
    c0 = -b * Fraction(k, 2) + d * Fraction(k * (3 * k - 6), 24)
    return [exact(v) for v in (c0, c1, c2, c3, c4)]


def scale_polynomial(q, theta1, theta0):
    """Rescale Q by 1/(theta1 - theta0); returns (Q', delta') with delta' = theta1/(theta1 - theta0)."""
    theta1, theta0 = exact(theta1), exact(theta0)
    if not theta1 > 0:
        raise ValueError("theta1 must be positive")
    if not theta0 < 0:
        raise ValueError("theta0 must be negative")
    if q.coefficient(0) != 0:
        raise ValueError("Q must be unbiased (no constant term)")
    width = theta1 - theta0
    return q.scaled(1 / width if isinstance(width, Surd) else Fraction(1) / width), exact(theta1 / width)


# --- verification -------------------------------------------------------------


def _weight_representative(k: int, s: int) -> np.ndarray:
    plus = (k + s) // 2
    return np.array([1] * plus + [-1] * (k - plus), dtype=np.int8)


def _symmetric_levels_satisfied(pred: Predicate, k: int) -> dict[int, bool]:
    levels = {}
    for s in range(-k, k + 1, 2):
        levels[s] = bool(pred(_weight_representative(k, s)[None, :])[0])
    if pred.has_table and k <= 16:
        weights = np.array([k - 2 * bin(i).count("1") for i in range(1 << k)])
        for s in levels:
            vals = pred.table[weights == s]
            if vals.size and vals.min() != vals.max():
                raise ValueError("predicate is not symmetric; use a multilinear polynomial")
    return levels


def verify_separating(pred: Predicate, q, delta) -> bool:
    """Exact check that q delta-separates pred."""
    delta = exact(delta)
    if q.coefficient(0) != 0:
        return False
    if q.k != pred.k:
        raise ValueError("arity mismatch")
    if isinstance(q, SymmetricSpec):
        sat = _symmetric_levels_satisfied(pred, q.k)
        for s, is_sat in sat.items():
            v = q.at_weight(s)
            if v < delta - 1 or (is_sat and v < delta):
                return False
        return True
    if delta == 0 and not q.coeffs:
        return True
    if pred.k > EXHAUSTIVE_MAX_K or not pred.has_table:
        raise ValueError("exhaustive verification needs an explicit truth table; use verify_huang for H_kappa")
    nums, den = q.all_values_exact()
    delta = Fraction(delta)
    low = (delta - 1) * den
    high = delta * den
    if isinstance(nums[0], (int, np.integer)) and low.denominator == 1 and high.denominator == 1:
        if np.any(nums < int(low)):
            return False
        sat = pred.table.astype(bool)
        return bool(np.all(nums[sat] >= int(high)))
    for v, p in zip(nums, pred.table):
        if v < low or (p and v < high):
            return False
    return True


# --- Huang's predicate ----------------------------------------------------------

# positions 1..6 of the ordered tuple; each monomial is a product of four triple bits
HUANG_ZETA: tuple[tuple[tuple[int, int, int], ...], ...] = (
    ((1, 2, 6), (1, 3, 4), (2, 3, 5), (4, 5, 6)),
    ((2, 5, 6), (1, 4, 6), (3, 4, 5), (1, 2, 3)),
    ((1, 3, 6), (2, 3, 6), (1, 4, 5), (2, 4, 5)),
    ((1, 2, 4), (2, 3, 4), (3, 5, 6), (1, 5, 6)),
    ((1, 2, 5), (1, 3, 5), (3, 4, 6), (2, 4, 6)),
)


def huang_zeta_checks() -> dict[str, bool]:
    """Structural facts the Huang construction relies on."""
    degree_two = all(
        sum(j in tri for tri in mono) == 2 for mono in HUANG_ZETA for j in range(1, 7)
    )
    triples = [frozenset(tri) for mono in HUANG_ZETA for tri in mono]
    every_triple_once = sorted(map(sorted, triples)) == sorted(
        map(list, itertools.combinations(range(1, 7), 3))
    )
    return {
        "five_monomials": len(HUANG_ZETA) == 5 and all(len(m) == 4 for m in HUANG_ZETA),
        "each_index_in_two_triples": degree_two,
        "each_triple_exactly_once": every_triple_once and len(triples) == 20,
    }


def _zeta_orbit_counts() -> dict[frozenset, int]:
    """Monomials (as sets of triples of {0..5}) over all 720 orderings, with multiplicity."""
    counts: dict[frozenset, int] = {}
    for perm in itertools.permutations(range(6)):
        for mono in HUANG_ZETA:
            key = frozenset(frozenset(perm[p - 1] for p in tri) for tri in mono)
            counts[key] = counts.get(key, 0) + 1
    return counts


def huang_polynomial(kappa: int) -> MultilinearPolynomial:
    """Average of zeta over all ordered 6-tuples of distinct elements of [kappa]."""
    if kappa < 6:
        raise ValueError("the zeta average needs kappa >= 6")
    k = huang_arity(kappa)
    var_of = {frozenset(t): kappa + i for i, t in enumerate(huang_triples(kappa))}
    orbit = _zeta_orbit_counts()
    n_tuples = math.perm(kappa, 6)
    coeffs: dict[int, Fraction] = {}
    for subset in itertools.combinations(range(kappa), 6):
        for mono, count in orbit.items():
            mask = 0
            for tri in mono:
                mask |= 1 << var_of[frozenset(subset[i] for i in tri)]
            coeffs[mask] = Fraction(count, n_tuples)
    return MultilinearPolynomial(k, coeffs, 4)


def huang_theta1(kappa: int) -> Fraction:
    """Lower bound of the unscaled Q on satisfying strings."""
    return 5 - Fraction(240, (kappa - 1) * (kappa - 2))


def strongly_satisfying(kappa: int, first_bits: np.ndarray) -> np.ndarray:
    first_bits = np.atleast_2d(np.asarray(first_bits, dtype=np.int8))
    tri = np.array(huang_triples(kappa))
    block = first_bits[:, tri[:, 0]] * first_bits[:, tri[:, 1]] * first_bits[:, tri[:, 2]]
    return np.concatenate([first_bits, block], axis=1)


def verify_huang(kappa: int, q: MultilinearPolynomial | None = None, delta=Fraction(1, 8),
                 samples: int = 10_000, seed=0) -> dict[str, bool]:
    """Structural checks plus exact evaluation on sampled satisfying strings.

    ``q`` is the scaled separator; the sampled strings are strongly
    satisfying strings with up to kappa bits flipped.
    """
    from .instances import make_rng

    raw = huang_polynomial(kappa)
    if q is None:
        q, delta = scale_polynomial(raw, Fraction(5, 7), -5)
    report = dict(huang_zeta_checks())
    rng = make_rng(seed)
    k = huang_arity(kappa)
    first = rng.choice(np.array([-1, 1], dtype=np.int8), size=(samples, kappa))
    strong = strongly_satisfying(kappa, first)
    report["strongly_satisfying_value_5"] = all(v == 5 for v in raw.evaluate_exact(strong[: min(samples, 1000)]))
    flipped = strong.copy()
    for row in range(samples):
        n_flip = int(rng.integers(0, kappa + 1))
        cols = rng.choice(k, size=n_flip, replace=False)
        flipped[row, cols] *= -1
    vals = q.evaluate_exact(flipped)
    report["satisfying_above_delta"] = all(v >= delta for v in vals)
    # Q is an average of zeta values, each a sum of five +-1 monomials, so Q >= -5;
    # after scaling that floor must sit at or above delta - 1
    mask = next(iter(raw.coeffs))
    scale = Fraction(q.coefficient(mask)) / raw.coeffs[mask]
    total = sum(abs(v) for v in raw.coeffs.values())
    report["global_lower_bound"] = total == 5 and -5 * scale >= delta - 1
    report["no_constant_term"] = q.constant == 0
    return report


# --- library of explicit separators ---------------------------------------------


@dataclass(frozen=True)
class LibrarySeparator:
    name: str
    k: int
    polynomial: object  # MultilinearPolynomial or SymmetricSpec
    delta: object
    theta1: object
    theta0: object
    notes: dict = field(default_factory=dict)


def _sqrt_k(k: int) -> Surd:
    return Surd.sqrt(k)


def library_separator(name: str, param: int) -> LibrarySeparator:
    """Explicit separating polynomials for Thr_k^{-1}, Maj_k, Thr_k^{-sqrt(k)/2} and H_kappa."""
    key = name.lower().replace("-", "_")
    if key == "thr_minus1":
        k = param
        if k < 5 or k % 2 == 0:
            raise ValueError("thr_minus1 needs odd k >= 5")
        raw = SymmetricSpec(k, Fraction(k * k - k - 1), Fraction(1 - k), Fraction(1 + k))
        theta1, theta0 = raw.at_weight(-1), raw.at_weight(-k)
        q, delta = scale_polynomial(raw, theta1, theta0)
        return LibrarySeparator(key, k, q, delta, theta1, theta0)
    if key == "maj":
        k = param
        if k < 25 or k % 2 == 0:
            raise ValueError("maj needs odd k >= 25")
        rk = _sqrt_k(k)
        raw = SymmetricSpec(
            k,
            Fraction(8, 27) / rk,
            Fraction(0),
            Fraction(-5, 9) / (rk * k),
            Fraction(4, 3 * k * k),
        )
        theta1, theta0 = Fraction(1, 8), Fraction(-8, 9)
        q, delta = scale_polynomial(raw, theta1, theta0)
        return LibrarySeparator(key, k, q, delta, theta1, theta0)
    if key == "thr_halfsqrt":
        k = param
        if k < 99 or k % 2 == 0:
            raise ValueError("thr_halfsqrt needs odd k >= 99")
        rk = _sqrt_k(k)
        raw = SymmetricSpec(
            k,
            Fraction(3, 2) / rk,
            Fraction(1, 2 * k),
            Fraction(2) / (rk * k),
            Fraction(8, k * k),
        )
        theta1, theta0 = Fraction(1, 48), Fraction(-14, 3)
        q, delta = scale_polynomial(raw, theta1, theta0)
        return LibrarySeparator(key, k, q, delta, theta1, theta0)
    if key == "huang":
        kappa = param
        if kappa < 9:
            raise ValueError("huang needs kappa >= 9")
        raw = huang_polynomial(kappa)
        theta1, theta0 = Fraction(5, 7), Fraction(-5)
        q, delta = scale_polynomial(raw, theta1, theta0)
        return LibrarySeparator(key, huang_arity(kappa), q, delta, theta1, theta0, {"kappa": kappa})
    raise ValueError(f"unknown separator {name!r}")


def symmetric_lower_bounds(spec: SymmetricSpec, threshold_ok) -> tuple[object, object]:
    """Minimum of Q_u over all weights and over weights accepted by ``threshold_ok``."""
    vals = {s: spec.at_weight(s) for s in spec.weights()}
    overall = min(vals.values())
    sat = min(v for s, v in vals.items() if threshold_ok(s))
    return overall, sat


def half_sqrt_ok(k: int):
    return lambda s: s >= 0 or 4 * s * s <= k


def elementary_symmetric_brute(z: np.ndarray, j: int) -> np.ndarray:
    """Sum over j-subsets T of z^T by direct enumeration (test oracle)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.int64))
    total = np.zeros(z.shape[0], dtype=np.int64)
    for subset in itertools.combinations(range(z.shape[1]), j):
        total += z[:, list(subset)].prod(axis=1)
    return total


def comb_safe(n: int, r: int) -> int:
    return comb(n, r) if 0 <= r <= n else 0
