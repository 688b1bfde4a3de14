"""Certified upper bounds on Opt(I) for CSP instances.

Every bound rests on the same layer: for each nonempty S subset of [k], a
value B_S with |D_hat_{I,x}(S)| <= B_S for every assignment x.  Writing
D_hat_{I,x}(S) = (1/m) sum_U v_U x^U with v_U the signed count of
constraints whose S-projection of the scope is U, B_S is the spectral
bound on that form divided by m.  Plancherel then turns the B_S into
bounds on Val_I(x) for all x at once.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .instances import Instance, subset_coordinates
from .polynomials import MultilinearPolynomial, SymmetricSpec, verify_separating
from .predicates import Predicate, named_predicate
from .spectral import (
    DEFAULT_CAP_DIM,
    CoefficientTensor,
    DimensionCapExceeded,
    SpectralFailure,
    certify_sum_form,
)
from .twise import EXACT_LP_MAX_K, masks_up_to, twise_distance

log = logging.getLogger(__name__)

__all__ = [
    "FourierBound",
    "FourierBoundTable",
    "RefutationOutcome",
    "certify_fourier_bound",
    "certify_quasirandom",
    "certify_t_quasirandom",
    "delta_refute",
    "fourier_bound_table",
    "is_xor",
    "refute",
    "strong_refute",
    "xor_strong_refute",
]


def max_workers() -> int:
    env = os.environ.get("CSPREF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn, items, workers: int | None = None):
    workers = max_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- Fourier-coefficient certificates ----------------------------------------------


DENSE_PROJECTION_MAX = 1 << 27


def projection_tensor(inst: Instance, mask: int) -> CoefficientTensor:
    """v_U = sum over constraints with T_S = U of prod_{i in S} c_i."""
    cols = subset_coordinates(mask, inst.k)
    if cols.size == 0:
        raise ValueError("S must be nonempty")
    s, n = cols.size, inst.n
    if 2 * n**s <= DENSE_PROJECTION_MAX:
        # one integer bincount over (U, sign bit): v_U = #plus - #minus
        code = np.zeros(inst.m, dtype=np.int64 if 2 * n**s >= 2**31 else np.int32)
        for j in cols:
            code *= n
            code += inst.scopes[:, j]
        negative = np.zeros(inst.m, dtype=bool)
        for j in cols:
            negative ^= inst.negs[:, j] < 0
        code *= 2
        code += negative
        counts = np.bincount(code, minlength=2 * n**s)
        v = (counts[0::2] - counts[1::2]).astype(np.float64)
        return CoefficientTensor.from_flat(s, n, v, check=False)
    sign = np.prod(inst.negs[:, cols], axis=1, dtype=np.int64)
    U = inst.scopes[:, cols].astype(np.int64)
    return CoefficientTensor(s, n, U, sign.astype(np.float64), check=False)


@dataclass
class FourierBound:
    mask: int
    s: int
    bound: float  # B_S
    form_bound: float  # bound on sum_U v_U x^U
    max_abs_v: float
    nnz: int
    certificate: dict | None = None
    seconds: float = 0.0


def certify_fourier_bound(inst: Instance, mask: int, *, cap_dim: int = DEFAULT_CAP_DIM,
                          compress: bool = True) -> FourierBound:
    """B_S with |D_hat_{I,x}(S)| <= B_S for every x in {-1,1}^n.

    The lower side needs no second computation: both routes (sum |v_i| and
    the spectral bound) are invariant under v -> -v.
    """
    if inst.m == 0:
        raise ValueError("instance has no constraints")
    start = time.perf_counter()
    v = projection_tensor(inst, mask)
    s = v.k
    form_bound, cert = certify_sum_form(v, s, cap_dim=cap_dim, compress=compress)
    return FourierBound(
        mask, s, form_bound / inst.m, form_bound, v.max_abs, v.nnz,
        cert.to_dict() if cert is not None else None, time.perf_counter() - start,
    )


@dataclass
class FourierBoundTable:
    digest: str
    m: int
    n: int
    k: int
    bounds: dict[int, FourierBound] = field(default_factory=dict)
    cap_dim: int = DEFAULT_CAP_DIM

    def __getitem__(self, mask: int) -> float:
        return self.bounds[mask].bound

    def __contains__(self, mask: int) -> bool:
        return mask in self.bounds

    def to_dict(self) -> dict:
        return {f"{mask:x}": fb.bound for mask, fb in sorted(self.bounds.items())}

    def regime(self) -> dict:
        p = None
        return {"m": self.m, "n": self.n, "k": self.k, "p": p,
                "n_pow_s_half": {fb.s: self.n ** (fb.s / 2) for fb in self.bounds.values()}}


def fourier_bound_table(inst: Instance, masks, *, cap_dim: int = DEFAULT_CAP_DIM,
                        table: FourierBoundTable | None = None, compress: bool = True,
                        workers: int | None = None) -> FourierBoundTable:
    """Compute B_S for every mask (reusing entries already in ``table``)."""
    if table is None:
        table = FourierBoundTable(inst.digest(), inst.m, inst.n, inst.k, cap_dim=cap_dim)
    todo = sorted({int(m) for m in masks if m and m not in table.bounds})
    results = _map(lambda mk: certify_fourier_bound(inst, mk, cap_dim=cap_dim, compress=compress),
                   todo, workers)
    for fb in results:
        table.bounds[fb.mask] = fb
    return table


# --- outcomes -------------------------------------------------------------------------


@dataclass
class RefutationOutcome:
    verdict: str  # "bound" | "fail"
    kind: str  # quasirandom | strong | xor | delta | t-quasirandom
    bound: float | None
    components: dict = field(default_factory=dict)
    fourier_bounds: dict[int, float] = field(default_factory=dict)
    delta: Fraction | None = None
    digest: str = ""
    seconds: float = 0.0
    reason: str | None = None

    @property
    def ok(self) -> bool:
        return self.verdict == "bound"

    @property
    def n_fourier(self) -> int:
        return len(self.fourier_bounds)

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "bound": self.bound,
            "kind": self.kind,
            "fourier_bounds": {f"{m:x}": b for m, b in sorted(self.fourier_bounds.items())},
            "components": self.components,
            "instance_digest": self.digest,
            "seconds": self.seconds,
        }
        if self.delta is not None:
            out["delta"] = f"{self.delta.numerator}/{self.delta.denominator}"
        if self.reason:
            out["reason"] = self.reason
        return out


def _fail(kind: str, inst: Instance, exc: Exception, start: float) -> RefutationOutcome:
    return RefutationOutcome("fail", kind, None, digest=inst.digest(),
                             seconds=time.perf_counter() - start, reason=f"{type(exc).__name__}: {exc}")


_CERT_ERRORS = (SpectralFailure, DimensionCapExceeded)


# --- quasirandomness ------------------------------------------------------------------


def certify_quasirandom(inst: Instance, **kw) -> RefutationOutcome:
    """eps with dTV(D_{I,x}, uniform) <= eps for all x; the bound reported is E[P] + eps."""
    start = time.perf_counter()
    masks = range(1, 1 << inst.k)
    try:
        table = fourier_bound_table(inst, masks, **kw)
    except _CERT_ERRORS as exc:
        return _fail("quasirandom", inst, exc, start)
    # dTV = E|density - 1| / 2 <= sqrt(sum_{S != 0} D_hat(S)^2) / 2
    eps = 0.5 * float(np.sqrt(sum(table[m] ** 2 for m in masks)))
    mean = float(inst.predicate.mean()) if inst.predicate.has_table else None
    bound = None if mean is None else mean + eps
    return RefutationOutcome("bound", "quasirandom", bound, {"epsilon": eps, "mean": mean},
                             {m: table[m] for m in masks}, digest=table.digest,
                             seconds=time.perf_counter() - start)


def certify_t_quasirandom(inst: Instance, t: int, **kw) -> RefutationOutcome:
    """eps_t = max_{0 < |S| <= t} B_S (the components hold eps_t; ``bound`` is eps_t)."""
    if not 1 <= t <= inst.k:
        raise ValueError("t must lie in [1, k]")
    start = time.perf_counter()
    masks = masks_up_to(inst.k, t)
    try:
        table = fourier_bound_table(inst, masks, **kw)
    except _CERT_ERRORS as exc:
        return _fail("t-quasirandom", inst, exc, start)
    eps = max(table[m] for m in masks)
    return RefutationOutcome("bound", "t-quasirandom", eps, {"epsilon_t": eps, "t": t},
                             {m: table[m] for m in masks}, digest=table.digest,
                             seconds=time.perf_counter() - start)


# --- strong refutation ------------------------------------------------------------------


def strong_refute(inst: Instance, *, table: FourierBoundTable | None = None, **kw) -> RefutationOutcome:
    """Opt(I) <= E[P] + sum_{S != 0} |P_hat(S)| B_S."""
    start = time.perf_counter()
    pred = inst.predicate
    fourier = pred.fourier
    terms = {mask: abs(c) for mask, c in fourier.items() if mask and c != 0}
    try:
        table = fourier_bound_table(inst, terms, table=table, **kw)
    except _CERT_ERRORS as exc:
        return _fail("strong", inst, exc, start)
    mean = pred.mean()
    excess = sum(float(c) * table[m] for m, c in terms.items())
    return RefutationOutcome(
        "bound", "strong", float(mean) + excess, {"mean": float(mean), "excess": excess},
        {m: table[m] for m in terms}, digest=table.digest, seconds=time.perf_counter() - start,
    )


def is_xor(pred: Predicate) -> bool:
    if pred.k > 24:
        return pred.to_dict().get("family") == "xor"
    return pred.has_table and np.array_equal(pred.table, named_predicate("xor", k=pred.k).table)


def xor_strong_refute(inst: Instance, *, cap_dim: int = DEFAULT_CAP_DIM, compress: bool = True) -> RefutationOutcome:
    """Opt(I) <= 1/2 + (2^{k-1}/m) * max_x sum_T w(T) x^T for k-XOR instances."""
    if not is_xor(inst.predicate):
        raise ValueError("xor_strong_refute needs the k-XOR predicate")
    if inst.m == 0:
        raise ValueError("instance has no constraints")
    start = time.perf_counter()
    k = inst.k
    sign = np.prod(inst.negs.astype(np.int64), axis=1)
    w = CoefficientTensor(k, inst.n, inst.scopes.astype(np.int64), -sign / 2.0**k, check=False)
    try:
        if k == 1:
            form, cert = certify_sum_form(w, 1)
        else:
            form, cert = certify_sum_form(w, k, scale=max(1.0, w.max_abs), cap_dim=cap_dim, compress=compress)
    except _CERT_ERRORS as exc:
        return _fail("xor", inst, exc, start)
    bound = 0.5 + 2.0 ** (k - 1) / inst.m * form
    comps = {"form_bound": form, "certificate": cert.to_dict() if cert else None}
    return RefutationOutcome("bound", "xor", bound, comps, digest=inst.digest(),
                             seconds=time.perf_counter() - start)


# --- delta refutation -----------------------------------------------------------------


def _poly_terms(q, t: int | None) -> tuple[dict[int, float], int]:
    if isinstance(q, SymmetricSpec):
        deg = q.degree if t is None else t
        terms = {}
        for mask in masks_up_to(q.k, min(deg, q.k)):
            c = q.coefficient(mask)
            if c != 0:
                terms[mask] = abs(float(c))
        return terms, deg
    if q.constant != 0:
        raise ValueError("separating polynomial must have no constant term")
    deg = q.degree
    return {m: abs(float(c)) for m, c in q.coeffs.items() if m}, deg


def delta_refute(inst: Instance, q, delta, *, verify: bool = True,
                 table: FourierBoundTable | None = None, **kw) -> RefutationOutcome:
    """Opt(I) <= 1 - delta + sum_{0 < |S| <= deg Q} |Q_hat(S)| B_S for a delta-separating Q."""
    start = time.perf_counter()
    delta = Fraction(delta) if not hasattr(delta, "sign") else delta
    if verify and not verify_separating(inst.predicate, q, delta):
        raise ValueError("Q does not delta-separate the predicate")
    terms, deg = _poly_terms(q, None)
    try:
        table = fourier_bound_table(inst, terms, table=table, **kw)
    except _CERT_ERRORS as exc:
        return _fail("delta", inst, exc, start)
    excess = sum(c * table[m] for m, c in terms.items())
    base = 1.0 - float(delta)
    return RefutationOutcome(
        "bound", "delta", base + excess, {"one_minus_delta": base, "excess": excess, "t": deg},
        {m: table[m] for m in terms}, delta=Fraction(delta) if isinstance(delta, (int, Fraction)) else None,
        digest=table.digest, seconds=time.perf_counter() - start,
    )


# --- pipeline -------------------------------------------------------------------------------


def derive_t(pred: Predicate, t: int | None = None):
    """(t, LPResult) for the delta path, or (None, None) when no t works.

    With t unspecified the smallest t >= 2 at which P is not t-wise
    supporting is used.
    """
    if pred.k > EXACT_LP_MAX_K or not pred.has_table:
        return None, None
    candidates = [t] if t is not None else range(min(2, pred.k), pred.k + 1)
    for tt in candidates:
        res = twise_distance(pred, tt)
        if res.delta > 0:
            return tt, res
    return None, None


def refute(inst: Instance, t: int | None = None, **kw) -> RefutationOutcome:
    """Best sound bound among the applicable certificates.

    k-XOR goes to the specialised path.  Otherwise the strong-refutation
    bound and (when the LP finds P not t-wise supporting) the delta bound
    with the LP dual are computed from a shared table of B_S; the smaller
    bound wins, ties going to the certificate needing fewer B_S.
    """
    start = time.perf_counter()
    pred = inst.predicate
    if is_xor(pred):
        out = xor_strong_refute(inst, **kw)
        out.components["route"] = "xor"
        return out
    table = FourierBoundTable(inst.digest(), inst.m, inst.n, inst.k, cap_dim=kw.get("cap_dim", DEFAULT_CAP_DIM))
    outcomes = []
    tt, lp = derive_t(pred, t)
    if lp is not None:
        outcomes.append(delta_refute(inst, lp.dual, lp.delta, verify=False, table=table, **kw))
        outcomes[-1].components["lp_t"] = tt
    outcomes.append(strong_refute(inst, table=table, **kw))
    good = [o for o in outcomes if o.ok]
    considered = [{"kind": o.kind, "verdict": o.verdict, "bound": o.bound, "reason": o.reason} for o in outcomes]
    if not good:
        out = outcomes[-1]
        out.components["considered"] = considered
        return out
    best = min(good, key=lambda o: (o.bound, o.n_fourier))
    best.components["considered"] = considered
    best.seconds = time.perf_counter() - start
    return best
