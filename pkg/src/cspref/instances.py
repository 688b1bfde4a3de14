"""CSP instances, the two random models, and exact evaluation oracles."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .predicates import Predicate, named_predicate

MAX_BRUTE_FORCE_N = 24

__all__ = [
    "AdapterResult",
    "Instance",
    "InducedDistribution",
    "brute_force_opt",
    "empirical_quasirandomness",
    "fixed_m_adapter",
    "induced_distribution",
    "induced_fourier",
    "make_rng",
    "read_dimacs",
    "sample_fixed_m",
    "sample_instance",
    "sample_planted",
    "universe_size",
    "value",
]


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator so streams are reproducible everywhere."""
    return np.random.Generator(np.random.Philox(seed))


def universe_size(k: int, n: int) -> int:
    return (2 * n) ** k


class Instance:
    """A multiset of constraints ``P(c o x_S) = 1`` over n variables.

    ``scopes`` holds 0-based variable indices with shape (m, k); ``negs``
    holds the negation patterns as +-1 entries of the same shape.
    """

    def __init__(self, predicate: Predicate, n: int, scopes, negs, meta: dict | None = None):
        k = predicate.k
        scopes = np.asarray(scopes)
        if scopes.size and not np.issubdtype(scopes.dtype, np.integer):
            raise ValueError("scope entries must be integers")
        scopes = scopes.reshape(-1, k)
        negs = np.asarray(negs, dtype=np.int8).reshape(-1, k)
        if scopes.shape != negs.shape:
            raise ValueError("scopes and negation patterns must have the same shape")
        if n < 1:
            raise ValueError("need at least one variable")
        if scopes.size and (scopes.min() < 0 or scopes.max() >= n):
            raise ValueError("scope entry outside [1..n]")
        if negs.size and not np.all(np.abs(negs) == 1):
            raise ValueError("negation entries must be +-1")
        dtype = np.uint16 if n <= np.iinfo(np.uint16).max else np.int64
        self.scopes = scopes.astype(dtype, copy=False)
        self.negs = negs
        self.scopes.setflags(write=False)
        self.negs.setflags(write=False)
        self.predicate = predicate
        self.n = int(n)
        self.meta = dict(meta or {})

    @property
    def k(self) -> int:
        return self.predicate.k

    @property
    def m(self) -> int:
        return self.scopes.shape[0]

    def __len__(self) -> int:
        return self.m

    def __repr__(self) -> str:
        return f"Instance({self.predicate.name or 'P'}, n={self.n}, m={self.m})"

    def universe_indices(self) -> np.ndarray:
        """Rank of each constraint in the lexicographic (scope, negation) order."""
        k, n = self.k, self.n
        idx = np.zeros(self.m, dtype=np.int64)
        for j in range(k):
            idx = idx * n + self.scopes[:, j].astype(np.int64)
        for j in range(k):
            idx = idx * 2 + (self.negs[:, j] < 0)
        return idx

    def is_set(self) -> bool:
        """True if no (scope, negation) pair repeats."""
        idx = self.universe_indices()
        return np.unique(idx).size == idx.size

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(repr(sorted(self.predicate.to_dict().items())).encode())
        h.update(str(self.n).encode())
        h.update(self.scopes.dtype.str.encode())
        h.update(memoryview(np.ascontiguousarray(self.scopes)).cast("B"))
        h.update(memoryview(np.ascontiguousarray(self.negs)).cast("B"))
        return h.hexdigest()

    def subset(self, rows) -> Instance:
        return Instance(self.predicate, self.n, self.scopes[rows], self.negs[rows], self.meta)

    def to_dict(self) -> dict:
        constraints = [
            {"scope": [int(v) + 1 for v in s], "neg": [int(c) for c in g]}
            for s, g in zip(self.scopes, self.negs)
        ]
        return {"predicate": self.predicate.to_dict(), "n": self.n,
                "constraints": constraints, "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, data: dict) -> Instance:
        pred = Predicate.from_dict(data["predicate"])
        cons = data["constraints"]
        scopes = np.array([c["scope"] for c in cons], dtype=np.int64).reshape(-1, pred.k) - 1
        negs = np.array([c["neg"] for c in cons], dtype=np.int8).reshape(-1, pred.k)
        return cls(pred, int(data["n"]), scopes, negs, data.get("meta"))

    # --- evaluation ---------------------------------------------------------

    def literal_indices(self, x) -> np.ndarray:
        """Table index of ``c o x_S`` per constraint; x may be (n,) or (batch, n)."""
        x = np.asarray(x)
        if x.shape[-1] != self.n:
            raise ValueError(f"assignment must have length {self.n}")
        xbits = (x < 0).astype(np.int32)
        lit = xbits[..., self.scopes] ^ (self.negs < 0)
        return (lit << np.arange(self.k, dtype=np.int32)).sum(axis=-1)

    def satisfied_counts(self, xs) -> np.ndarray:
        self.predicate._require_table()
        xs = np.atleast_2d(np.asarray(xs))
        out = np.empty(xs.shape[0], dtype=np.int64)
        step = max(1, 4_000_000 // max(1, self.m * self.k))
        for lo in range(0, xs.shape[0], step):
            idx = self.literal_indices(xs[lo:lo + step])
            out[lo:lo + step] = self.predicate.table[idx].sum(axis=-1)
        return out


def _decode_universe(idx: np.ndarray, k: int, n: int, chunk: int = 1 << 22) -> tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(idx, dtype=np.int64)
    negs = np.empty((idx.size, k), dtype=np.int8)
    scopes = np.empty((idx.size, k), dtype=np.uint16 if n <= np.iinfo(np.uint16).max else np.int64)
    for lo in range(0, idx.size, chunk):
        rest = idx[lo:lo + chunk].copy()
        for j in range(k - 1, -1, -1):
            negs[lo:lo + chunk, j] = 1 - 2 * (rest & 1)
            rest >>= 1
        for j in range(k - 1, -1, -1):
            scopes[lo:lo + chunk, j] = rest % n
            rest //= n
    return scopes, negs


def _checked_universe(k: int, n: int) -> int:
    size = universe_size(k, n)
    if size >= 2**62:
        raise OverflowError(f"constraint universe (2n)^k = {size} is too large")
    return size


def sample_instance(pred: Predicate, n: int, p: float, seed) -> Instance:
    """Draw from F_P(n, p): each of the (2n)^k constraints independently w.p. p.

    The count is drawn from Binomial((2n)^k, p) and that many distinct
    universe ranks are chosen uniformly, which has the same law as the
    independent coin flips without scanning the universe.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    size = _checked_universe(pred.k, n)
    rng = make_rng(seed)
    m = int(rng.binomial(size, p))
    idx = np.sort(rng.choice(size, size=m, replace=False)) if m < size else np.arange(size)
    scopes, negs = _decode_universe(idx, pred.k, n)
    meta = {"model": "binomial", "p": p, "seed": seed, "expected_m": size * p}
    return Instance(pred, n, scopes, negs, meta)


def sample_fixed_m(pred: Predicate, n: int, m: int, seed) -> Instance:
    """Uniformly random m-subset of the constraint universe."""
    size = _checked_universe(pred.k, n)
    if not 0 <= m <= size:
        raise ValueError(f"m must lie in [0, {size}]")
    rng = make_rng(seed)
    idx = np.sort(rng.choice(size, size=m, replace=False)) if m < size else np.arange(size)
    scopes, negs = _decode_universe(idx, pred.k, n)
    return Instance(pred, n, scopes, negs, {"model": "fixed", "m": m, "seed": seed})


def sample_planted(pred: Predicate, n: int, m: int, seed, planted=None) -> tuple[Instance, np.ndarray]:
    """m constraints that are all satisfied by a planted assignment.

    Scopes are uniform; the literal string c o x*_S is uniform over P^{-1}(1).
    """
    pred._require_table()
    if pred.n_satisfying == 0:
        raise ValueError("cannot plant an unsatisfiable predicate")
    rng = make_rng(seed)
    x = rng.choice(np.array([-1, 1], dtype=np.int8), size=n) if planted is None else np.asarray(planted, dtype=np.int8)
    scopes = rng.integers(0, n, size=(m, pred.k))
    sat = np.flatnonzero(pred.table)
    alpha = sat[rng.integers(0, sat.size, size=m)]
    alpha_z = 1 - 2 * ((alpha[:, None] >> np.arange(pred.k)) & 1)
    negs = (alpha_z * x[scopes]).astype(np.int8)
    meta = {"model": "planted", "m": m, "seed": seed}
    return Instance(pred, n, scopes, negs, meta), x


# --- exact evaluation -------------------------------------------------------


def _require_constraints(inst: Instance):
    if inst.m == 0:
        raise ValueError("instance has no constraints")


def value(inst: Instance, x) -> Fraction:
    """Exact fraction of constraints satisfied by x."""
    _require_constraints(inst)
    x = np.asarray(x)
    if x.ndim != 1 or not np.all(np.abs(x) == 1):
        raise ValueError("x must be a +-1 vector")
    return Fraction(int(inst.satisfied_counts(x)[0]), inst.m)


def all_assignments(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    stop = 1 << n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    return (1 - 2 * ((idx[:, None] >> np.arange(n)) & 1)).astype(np.int8)


def brute_force_opt(inst: Instance) -> Fraction:
    """Maximum of value(I, x) over all 2^n assignments."""
    _require_constraints(inst)
    if inst.n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute force is limited to n <= {MAX_BRUTE_FORCE_N}")
    best = 0
    total = 1 << inst.n
    block = 1 << min(inst.n, 14)
    for lo in range(0, total, block):
        xs = all_assignments(inst.n, lo, min(total, lo + block))
        best = max(best, int(inst.satisfied_counts(xs).max()))
    return Fraction(best, inst.m)


@dataclass(frozen=True)
class InducedDistribution:
    """Empirical distribution of the k-bit literal strings under one assignment."""

    k: int
    counts: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.counts.sum())

    def mass(self, atom: int) -> Fraction:
        return Fraction(int(self.counts[atom]), self.m)

    def density(self) -> list[Fraction]:
        """2^k * D(z) per atom."""
        return [Fraction(int(c) << self.k, self.m) for c in self.counts]

    def tv_to_uniform(self) -> Fraction:
        size = 1 << self.k
        return Fraction(sum(abs(int(c) * size - self.m) for c in self.counts), 2 * size * self.m)

    def fourier(self, mask: int) -> Fraction:
        from .predicates import index_to_z

        z = index_to_z(np.arange(1 << self.k), self.k).astype(np.int64)
        chars = np.prod(np.where((mask >> np.arange(self.k)) & 1, z, 1), axis=1)
        return Fraction(int((chars * self.counts).sum()), self.m)


def induced_distribution(inst: Instance, x) -> InducedDistribution:
    _require_constraints(inst)
    idx = inst.literal_indices(np.asarray(x))
    counts = np.bincount(idx, minlength=1 << inst.k).astype(np.int64)
    return InducedDistribution(inst.k, counts)


def subset_coordinates(mask: int, k: int) -> np.ndarray:
    return np.array([j for j in range(k) if mask >> j & 1], dtype=np.int64)


def induced_fourier(inst: Instance, x, mask: int) -> Fraction:
    """D_hat_{I,x}(S) = (1/m) sum over constraints of c^S x^{T_S}, computed directly."""
    _require_constraints(inst)
    cols = subset_coordinates(mask, inst.k)
    x = np.asarray(x, dtype=np.int64)
    if cols.size == 0:
        return Fraction(1)
    terms = np.prod(inst.negs[:, cols].astype(np.int64) * x[inst.scopes[:, cols]], axis=1)
    return Fraction(int(terms.sum()), inst.m)


def empirical_quasirandomness(inst: Instance, restarts: int = 4, seed=0, max_passes: int = 30) -> float:
    """Largest dTV(D_{I,x}, uniform) found by single-flip hill climbing over x.

    This is a lower bound on the true quasirandomness parameter; certified
    upper bounds come from ``refute.certify_quasirandom``.
    """
    _require_constraints(inst)
    rng = make_rng(seed)
    size = 1 << inst.k

    def tv(x):
        counts = np.bincount(inst.literal_indices(x), minlength=size)
        return np.abs(counts * size - inst.m).sum() / (2 * size * inst.m)

    best = 0.0
    for _ in range(restarts):
        x = rng.choice(np.array([-1, 1], dtype=np.int8), size=inst.n)
        cur = tv(x)
        for _ in range(max_passes):
            improved = False
            for i in rng.permutation(inst.n):
                x[i] = -x[i]
                cand = tv(x)
                if cand > cur + 1e-15:
                    cur, improved = cand, True
                else:
                    x[i] = -x[i]
            if not improved:
                break
        best = max(best, cur)
    return float(best)


# --- fixed-m simulation ------------------------------------------------------


@dataclass(frozen=True)
class AdapterResult:
    """Outcome of simulating F_P(n, p) from a fixed-size instance.

    On success, any bound certified for ``instance`` transfers to the
    original instance after adding ``slack`` (= 2d).
    """

    instance: Instance | None
    d: float
    p: float
    drawn_m: int

    @property
    def ok(self) -> bool:
        return self.instance is not None

    @property
    def slack(self) -> float:
        return 2 * self.d


def fixed_m_adapter(inst: Instance, seed, p_min: float = 0.0) -> AdapterResult:
    """Subsample a fixed-m instance so it is distributed like F_P(n, p)."""
    mu = inst.m
    if mu < 2:
        raise ValueError("need at least two constraints")
    d = math.sqrt(math.log(mu) / mu)
    size = universe_size(inst.k, inst.n)
    if 2 * d >= 1 or mu * (1 - d) < size * p_min:
        raise ValueError(f"mu={mu} is too small for the simulation (d={d:.3g})")
    p = mu * (1 - d) / size
    rng = make_rng(seed)
    drawn = int(rng.binomial(size, p))
    if drawn > mu or drawn < mu * (1 - 2 * d):
        return AdapterResult(None, d, p, drawn)
    keep = np.sort(rng.choice(mu, size=drawn, replace=False))
    sub = inst.subset(keep)
    sub.meta = {"model": "binomial-sim", "p": p, "seed": seed, "source_m": mu}
    return AdapterResult(sub, d, p, drawn)


# --- DIMACS -----------------------------------------------------------------


def read_dimacs(text: str) -> Instance:
    """Read a CNF whose clauses all have the same width k as a k-OR instance."""
    n = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            n = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(current)
    if n is None:
        raise ValueError("missing 'p cnf' line")
    if not clauses:
        raise ValueError("no clauses")
    widths = {len(c) for c in clauses}
    if len(widths) != 1:
        raise ValueError(f"mixed clause widths {sorted(widths)}")
    k = widths.pop()
    lits = np.array(clauses, dtype=np.int64)
    scopes = np.abs(lits) - 1
    negs = np.sign(lits).astype(np.int8)
    return Instance(named_predicate("or", k=k), n, scopes, negs, {"model": "dimacs"})


def write_dimacs(inst: Instance) -> str:
    if inst.predicate.family != "or":
        raise ValueError("DIMACS export needs a k-OR instance")
    lines = [f"p cnf {inst.n} {inst.m}"]
    for s, c in zip(inst.scopes, inst.negs):
        lines.append(" ".join(str(int(c_j) * (int(s_j) + 1)) for s_j, c_j in zip(s, c)) + " 0")
    return "\n".join(lines) + "\n"
