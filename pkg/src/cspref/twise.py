"""Exact LP for t-wise supportability and its dual separating polynomial.

Variables are the 2^k point masses D(z).  Rows pin every character of
degree 1..t to zero and the total mass to one; the objective is the mass
on unsatisfying points.  The optimum delta is the distance from P to the
nearest t-wise uniform distribution supported on P^{-1}(1), and the row
prices give an unbiased polynomial Q of degree <= t that delta-separates P.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _simplex
from .polynomials import MultilinearPolynomial, verify_separating
from .predicates import Predicate, all_points, index_to_z

__all__ = [
    "EXACT_LP_MAX_K",
    "LPResult",
    "granularity_K",
    "granularity_bound",
    "exceeds_granularity",
    "masks_up_to",
    "twise_distance",
]

EXACT_LP_MAX_K = 16


def masks_up_to(k: int, t: int, *, include_empty: bool = False) -> list[int]:
    """Subsets of [k] of size 1..t (sorted by size, then lexicographically)."""
    out = [0] if include_empty else []
    for size in range(1, t + 1):
        for combo in itertools.combinations(range(k), size):
            out.append(sum(1 << j for j in combo))
    return out


@dataclass(frozen=True)
class LPResult:
    k: int
    t: int
    delta: Fraction
    primal: dict[int, Fraction]  # point index -> mass
    dual: MultilinearPolynomial
    method: str = "simplex"
    pivots: int = 0

    @property
    def status(self) -> str:
        return "supporting" if self.delta == 0 else "delta_far"

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "t": self.t,
            "status": self.status,
            "delta": f"{self.delta.numerator}/{self.delta.denominator}",
            "method": self.method,
            "primal_support": {
                f"{i:x}": f"{v.numerator}/{v.denominator}" for i, v in sorted(self.primal.items())
            },
            "dual_polynomial": self.dual.to_dict(),
        }

    def check(self, pred: Predicate) -> dict[str, bool]:
        """Re-verify primal feasibility, moment conditions and dual separation exactly."""
        total = sum(self.primal.values(), Fraction(0))
        masses_ok = all(v >= 0 for v in self.primal.values()) and total == 1
        moments_ok = True
        idx = np.array(sorted(self.primal), dtype=np.int64)
        weights = [self.primal[i] for i in idx]
        for mask in masks_up_to(self.k, self.t):
            signs = 1 - 2 * (np.bitwise_count(idx & mask).astype(np.int64) & 1) if idx.size else []
            if sum((w if s > 0 else -w for w, s in zip(weights, signs)), Fraction(0)) != 0:
                moments_ok = False
                break
        objective = sum((v for i, v in self.primal.items() if not pred.table[i]), Fraction(0))
        return {
            "primal_feasible": masses_ok and moments_ok,
            "primal_objective_is_delta": objective == self.delta,
            "dual_separates": verify_separating(pred, self.dual, self.delta),
        }


def _character_rows(k: int, masks: list[int]) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.int64)
    rows = np.empty((len(masks), idx.size), dtype=np.int64)
    for r, mask in enumerate(masks):
        rows[r] = 1 - 2 * (np.bitwise_count(idx & mask).astype(np.int64) & 1)
    return rows


def twise_distance(pred: Predicate, t: int, *, method: str = "auto", warm_start: bool = True) -> LPResult:
    """Exact distance of ``pred`` from supporting a t-wise uniform distribution.

    ``method`` is "simplex", "uniform" (the t = k closed form) or "auto"
    (closed form when t = k, simplex otherwise).
    """
    k = pred.k
    if not 1 <= t <= k:
        raise ValueError(f"t must lie in [1, {k}]")
    if k > EXACT_LP_MAX_K:
        raise ValueError(f"exact LP supports k <= {EXACT_LP_MAX_K}")
    pred._require_table()
    if method == "auto":
        method = "uniform" if t == k else "simplex"
    if method == "uniform":
        if t != k:
            raise ValueError("the closed form applies only at t = k")
        return _full_independence(pred)
    if method != "simplex":
        raise ValueError(f"unknown method {method!r}")

    masks = masks_up_to(k, t)
    A = np.vstack([_character_rows(k, masks), np.ones((1, 1 << k), dtype=np.int64)])
    b = [Fraction(0)] * len(masks) + [Fraction(1)]
    c = 1 - pred.table.astype(np.int64)
    sol = _simplex.solve_exact(A, b, c, warm_start=warm_start)
    if sol.status != "optimal":
        raise _simplex.LPError(f"LP ended with status {sol.status}")
    # reduced costs >= 0 read (1 - P(z)) >= y_0 + sum_S y_S z^S, so Q = -sum_S y_S z^S
    coeffs = {mask: -y for mask, y in zip(masks, sol.y) if y != 0}
    delta = sol.y[-1]
    if delta != sol.objective:
        raise _simplex.LPError("dual objective disagrees with primal optimum")
    dual = MultilinearPolynomial(k, coeffs, t)
    return LPResult(k, t, delta, dict(sol.x), dual, "simplex", sol.pivots)


def _full_independence(pred: Predicate) -> LPResult:
    k = pred.k
    size = 1 << k
    delta = Fraction(size - pred.n_satisfying, size)
    fourier = pred.fourier
    coeffs = {mask: v for mask, v in fourier.items() if mask}
    uniform = {i: Fraction(1, size) for i in range(size)}
    return LPResult(k, k, delta, uniform, MultilinearPolynomial(k, coeffs, k), "uniform", 0)


def granularity_K(k: int, t: int) -> int:
    if not 0 <= t <= k:
        raise ValueError("need 0 <= t <= k")
    return 1 + sum(math.comb(k, i) for i in range(1, t + 1))


def granularity_bound(k: int, t: int) -> float:
    """K^{-K/2}: every nonzero LP optimum is at least this large.

    Returned as a float because K^{-K/2} is irrational for odd K; the value
    underflows to 0.0 for large K.  Use ``exceeds_granularity`` for an exact
    comparison.
    """
    K = granularity_K(k, t)
    return math.exp(-0.5 * K * math.log(K))


def granularity_exact(k: int, t: int) -> Fraction | None:
    """K^{-K/2} as a Fraction when K is even (None otherwise)."""
    K = granularity_K(k, t)
    return Fraction(1, K ** (K // 2)) if K % 2 == 0 else None


def exceeds_granularity(delta, k: int, t: int) -> bool:
    """Exact test delta >= K^{-K/2}, i.e. delta^2 K^K >= 1."""
    delta = Fraction(delta)
    K = granularity_K(k, t)
    return delta >= 0 and delta * delta * K**K >= 1


def primal_atoms(result: LPResult) -> np.ndarray:
    """The support points of the optimal distribution as rows of +-1."""
    idx = np.array(sorted(result.primal), dtype=np.int64)
    return index_to_z(idx, result.k) if idx.size else np.zeros((0, result.k), dtype=np.int8)


def delta_profile(pred: Predicate, t_max: int | None = None) -> list[LPResult]:
    """LP results for t = 1 .. t_max (default k)."""
    t_max = pred.k if t_max is None else t_max
    return [twise_distance(pred, t) for t in range(1, t_max + 1)]


def _points(k: int) -> np.ndarray:
    return all_points(k)
