"""Exact revised simplex (Bland's rule) for min c.x s.t. Ax = b, x >= 0.

Basis solves are done over the rationals with FLINT.  A floating-point
solve may be used to propose a starting basis; it is only accepted after
exact feasibility checks, and optimality is always decided exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import flint
import numpy as np

log = logging.getLogger(__name__)


class LPError(RuntimeError):
    pass


@dataclass
class ExactLPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: Fraction | None
    x: dict[int, Fraction]  # nonzero primal entries
    y: list[Fraction]  # row prices, B^T y = c_B
    basis: list[int]
    pivots: int


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _fmpq_matrix(rows: np.ndarray) -> flint.fmpq_mat:
    r, c = rows.shape
    return flint.fmpq_mat(r, c, [int(v) for v in rows.ravel()])


def _column_vector(values) -> flint.fmpq_mat:
    vals = list(values)
    return flint.fmpq_mat(len(vals), 1, [flint.fmpq(v.numerator, v.denominator) if isinstance(v, Fraction) else v for v in vals])


class _Problem:
    def __init__(self, A: np.ndarray, b: list[Fraction], c: np.ndarray):
        self.A = np.asarray(A, dtype=np.int64)
        self.b = [Fraction(v) for v in b]
        self.c = np.asarray(c, dtype=np.int64)
        self.r, self.N = self.A.shape

    def basis_matrix(self, basis: list[int]) -> flint.fmpq_mat:
        return _fmpq_matrix(self.A[:, basis])

    def reduced_cost_numerators(self, y: list[Fraction]) -> np.ndarray:
        """Sign-equivalent reduced costs: D*c_j - (A^T (D*y))_j."""
        den = lcm(*(v.denominator for v in y)) if y else 1
        ints = [v.numerator * (den // v.denominator) for v in y]
        bound = max((abs(v) for v in ints), default=0) * self.r
        if bound < 2**62 and abs(den) * int(np.abs(self.c).max(initial=0)) < 2**62:
            aty = self.A.T @ np.array(ints, dtype=np.int64)
            return self.c * den - aty
        aty = self.A.T.astype(object) @ np.array(ints, dtype=object)
        return self.c.astype(object) * den - aty


def _solve_basis(B: flint.fmpq_mat, rhs) -> list[Fraction]:
    sol = B.solve(_column_vector(rhs))
    return [_to_fraction(sol[i, 0]) for i in range(sol.nrows())]


def _solve_basis_t(B: flint.fmpq_mat, rhs) -> list[Fraction]:
    return _solve_basis(B.transpose(), rhs)


def _run_simplex(prob: _Problem, basis: list[int], max_pivots: int) -> tuple[str, list[int], list[Fraction], int]:
    """Bland's-rule iterations from a primal feasible basis."""
    pivots = 0
    while True:
        B = prob.basis_matrix(basis)
        xb = _solve_basis(B, prob.b)
        y = _solve_basis_t(B, [int(prob.c[j]) for j in basis])
        red = prob.reduced_cost_numerators(y)
        in_basis = set(basis)
        entering = next((j for j in np.flatnonzero(red < 0) if j not in in_basis), None)
        if entering is None:
            return "optimal", basis, xb, pivots
        d = _solve_basis(B, [int(v) for v in prob.A[:, entering]])
        best = None
        for i, di in enumerate(d):
            if di > 0:
                key = (xb[i] / di, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded", basis, xb, pivots
        basis = list(basis)
        basis[best[1]] = int(entering)
        pivots += 1
        if pivots > max_pivots:
            raise LPError(f"no convergence after {max_pivots} pivots")


def _phase_one(A: np.ndarray, b: list[Fraction], max_pivots: int) -> list[int] | None:
    r, N = A.shape
    signs = np.array([-1 if v < 0 else 1 for v in b], dtype=np.int64)
    A1 = np.hstack([A * signs[:, None], np.eye(r, dtype=np.int64)])
    b1 = [abs(v) for v in b]
    c1 = np.concatenate([np.zeros(N, dtype=np.int64), np.ones(r, dtype=np.int64)])
    prob = _Problem(A1, b1, c1)
    status, basis, xb, _ = _run_simplex(prob, list(range(N, N + r)), max_pivots)
    if status != "optimal":
        raise LPError("phase one cannot be unbounded")
    if sum(xb[i] for i, j in enumerate(basis) if j >= N) > 0:
        return None
    # drive zero-level artificials out of the basis
    for pos in range(r):
        if basis[pos] < N:
            continue
        B = prob.basis_matrix(basis)
        row = _solve_basis_t(B, [1 if i == pos else 0 for i in range(r)])
        den = lcm(*(v.denominator for v in row))
        ints = np.array([v.numerator * (den // v.denominator) for v in row], dtype=object)
        vals = A1[:, :N].T.astype(object) @ ints
        cand = [j for j in np.flatnonzero(vals != 0) if j not in basis]
        if not cand:
            raise LPError("constraint matrix is rank deficient")
        basis[pos] = int(cand[0])
    return basis


def _float_warm_basis(A: np.ndarray, b: list[Fraction], c: np.ndarray) -> list[int] | None:
    from scipy.optimize import linprog

    res = linprog(c, A_eq=A.astype(float), b_eq=[float(v) for v in b], bounds=(0, None), method="highs-ds")
    if res.status != 0:
        return None
    r = A.shape[0]
    order = list(np.argsort(-res.x, kind="stable"))
    support = [j for j in order if res.x[j] > 1e-9]
    # complete with columns the float dual prices at zero reduced cost, so
    # the candidate basis is (nearly) dual feasible as well
    y = np.asarray(res.eqlin.marginals, dtype=float)
    red = np.abs(c - A.T.astype(float) @ y)
    tight = [j for j in np.argsort(red, kind="stable") if res.x[j] <= 1e-9]
    chosen: list[int] = []
    q = np.zeros((r, 0))
    for j in support + tight:
        col = A[:, j].astype(float)
        resid = col - q @ (q.T @ col)
        resid -= q @ (q.T @ resid)
        nrm = np.linalg.norm(resid)
        if nrm > 1e-8 * max(1.0, np.linalg.norm(col)):
            q = np.hstack([q, (resid / nrm)[:, None]])
            chosen.append(int(j))
            if len(chosen) == r:
                return chosen
    return None


def solve_exact(A, b, c, *, warm_start: bool = True, max_pivots: int = 100_000) -> ExactLPSolution:
    """Minimise c.x subject to Ax = b, x >= 0, in exact rational arithmetic.

    ``A`` and ``c`` must be integer; ``b`` may be rational.  ``A`` must have
    full row rank.
    """
    A = np.asarray(A, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    b = [Fraction(v) for v in b]
    prob = _Problem(A, b, c)

    basis = None
    if warm_start:
        cand = _float_warm_basis(A, b, c)
        if cand is not None:
            B = prob.basis_matrix(cand)
            if B.rank() == prob.r and all(v >= 0 for v in _solve_basis(B, b)):
                basis = cand
            else:
                log.debug("float basis rejected by exact check")
    if basis is None:
        basis = _phase_one(A, b, max_pivots)
        if basis is None:
            return ExactLPSolution("infeasible", None, {}, [], [], 0)

    status, basis, xb, pivots = _run_simplex(prob, basis, max_pivots)
    if status != "optimal":
        return ExactLPSolution(status, None, {}, [], basis, pivots)
    B = prob.basis_matrix(basis)
    y = _solve_basis_t(B, [int(c[j]) for j in basis])
    x = {j: v for j, v in zip(basis, xb) if v != 0}
    obj = sum((Fraction(int(c[j])) * v for j, v in x.items()), Fraction(0))
    dual_obj = sum((bi * yi for bi, yi in zip(b, y)), Fraction(0))
    if obj != dual_obj:
        raise LPError("strong duality check failed")
    return ExactLPSolution("optimal", obj, x, y, basis, pivots)
