"""Boolean predicates on {-1,1}^k and their Fourier expansions.

Assignments are encoded as integers: bit ``j`` of index ``i`` is set iff
``z[j] == -1``.  Index 0 is therefore the all-(+1) string.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

MAX_TABLE_ARITY = 24
MAX_HUANG_KAPPA = 12

__all__ = [
    "FourierExpansion",
    "all_points",
    "Predicate",
    "fourier_expansion",
    "huang_arity",
    "index_to_z",
    "mean",
    "named_predicate",
    "parse_predicate_spec",
    "predicate_from_truth_table",
    "walsh_hadamard",
    "z_to_index",
    "zero_variability",
]


def index_to_z(idx, k: int) -> np.ndarray:
    """Decode assignment indices into +-1 vectors (last axis has length k)."""
    idx = np.asarray(idx, dtype=np.int64)
    bits = (idx[..., None] >> np.arange(k, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def z_to_index(z) -> np.ndarray:
    z = np.asarray(z)
    k = z.shape[-1]
    bits = (z < 0).astype(np.int64)
    return (bits << np.arange(k, dtype=np.int64)).sum(axis=-1)


def all_points(k: int) -> np.ndarray:
    return index_to_z(np.arange(1 << k), k)


def walsh_hadamard(values) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform of a length-2^k vector.

    Entry ``S`` of the result is ``sum_i values[i] * (-1)^{|i & S|}``.
    Integer input stays integer, so the transform is exact.
    """
    a = np.array(values, copy=True)
    n = a.shape[0]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        lo = a[:, 0, :].copy()
        hi = a[:, 1, :]
        a[:, 0, :] += hi
        a[:, 1, :] = lo - hi
        a = a.reshape(n)
        h *= 2
    return a


@dataclass(frozen=True)
class FourierExpansion:
    """Exact Fourier coefficients, stored as integers over 2^k."""

    k: int
    numerators: np.ndarray = field(repr=False)

    @property
    def denominator(self) -> int:
        return 1 << self.k

    def coefficient(self, mask: int) -> Fraction:
        return Fraction(int(self.numerators[mask]), self.denominator)

    def items(self) -> Iterable[tuple[int, Fraction]]:
        """Nonzero ``(mask, coefficient)`` pairs in increasing mask order."""
        for mask in np.flatnonzero(self.numerators):
            yield int(mask), self.coefficient(int(mask))

    def as_dict(self) -> dict[int, Fraction]:
        return dict(self.items())

    def evaluate(self, z) -> np.ndarray:
        """Evaluate sum_S c(S) z^S as floats (use ``evaluate_exact`` for rationals)."""
        pts = z_to_index(z)
        chars = _parity_matrix(pts, np.flatnonzero(self.numerators))
        coeffs = self.numerators[np.flatnonzero(self.numerators)] / self.denominator
        return chars @ coeffs

    def evaluate_exact(self) -> list[Fraction]:
        """Values on all 2^k points, in index order."""
        vals = walsh_hadamard(self.numerators.astype(object))
        return [Fraction(int(v), self.denominator) for v in vals]


def _parity_matrix(points: np.ndarray, masks: np.ndarray) -> np.ndarray:
    both = np.bitwise_and.outer(np.asarray(points, dtype=np.int64), np.asarray(masks, dtype=np.int64))
    par = np.zeros(both.shape, dtype=np.int64)
    while both.any():
        par ^= both & 1
        both >>= 1
    return 1 - 2 * par


class Predicate:
    """A predicate P: {-1,1}^k -> {0,1}.

    Predicates with ``k <= 24`` carry an explicit truth table.  Larger ones
    (Huang with kappa >= 6, wide thresholds) only support point evaluation
    through ``evaluator``.
    """

    def __init__(
        self,
        k: int,
        table: np.ndarray | None = None,
        name: str | None = None,
        *,
        family: str | None = None,
        params: dict | None = None,
        evaluator: Callable[[np.ndarray], np.ndarray] | None = None,
    ):
        if k < 1:
            raise ValueError("arity must be positive")
        if table is None and evaluator is None:
            raise ValueError("need a truth table or an evaluator")
        if table is not None:
            if k > MAX_TABLE_ARITY:
                raise ValueError(f"truth tables are limited to k <= {MAX_TABLE_ARITY}")
            table = np.asarray(table).astype(np.uint8)
            if table.shape != (1 << k,):
                raise ValueError(f"truth table must have length 2^{k}")
            if np.any(table > 1):
                raise ValueError("truth table entries must be 0 or 1")
            table.setflags(write=False)
        self.k = k
        self.table = table
        self.name = name
        self.family = family
        self.params = dict(params or {})
        self._evaluator = evaluator

    def __repr__(self) -> str:
        label = self.name or "anonymous"
        return f"Predicate({label!r}, k={self.k})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Predicate) or other.k != self.k:
            return NotImplemented
        if self.table is None or other.table is None:
            return self is other
        return bool(np.array_equal(self.table, other.table))

    def __hash__(self) -> int:
        if self.table is None:
            return id(self)
        return hash((self.k, self.table.tobytes()))

    @property
    def has_table(self) -> bool:
        return self.table is not None

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z)
        if z.shape[-1] != self.k:
            raise ValueError(f"expected strings of length {self.k}")
        if self.table is not None:
            return self.table[z_to_index(z)]
        return np.asarray(self._evaluator(z.reshape(-1, self.k)), dtype=np.uint8).reshape(z.shape[:-1])

    @cached_property
    def n_satisfying(self) -> int:
        self._require_table()
        return int(self.table.sum())

    @property
    def is_trivial(self) -> bool:
        """True for the constant predicates (never a refutation target)."""
        return self.n_satisfying in (0, 1 << self.k)

    def mean(self) -> Fraction:
        return Fraction(self.n_satisfying, 1 << self.k)

    @cached_property
    def fourier(self) -> FourierExpansion:
        self._require_table()
        nums = walsh_hadamard(self.table.astype(np.int64))
        nums.setflags(write=False)
        return FourierExpansion(self.k, nums)

    def _require_table(self):
        if self.table is None:
            raise ValueError(f"{self!r} has no explicit truth table (k={self.k})")

    def to_dict(self) -> dict:
        if self.family is not None:
            return {"family": self.family, "params": dict(self.params)}
        self._require_table()
        out = {"k": self.k, "table": table_to_hex(self.table)}
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data: dict) -> Predicate:
        if "family" in data:
            return named_predicate(data["family"], **data.get("params", {}))
        k = int(data["k"])
        return cls(k, hex_to_table(data["table"], k), data.get("name"))


def table_to_hex(table: np.ndarray) -> str:
    """Pack a bit table into hex nibbles; nibble j holds bits 4j..4j+3, low bit first."""
    bits = np.asarray(table, dtype=np.uint8)
    pad = (-len(bits)) % 4
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)]).reshape(-1, 4)
    nibbles = bits @ np.array([1, 2, 4, 8])
    return "".join("0123456789abcdef"[v] for v in nibbles)


def hex_to_table(text: str, k: int) -> np.ndarray:
    size = 1 << k
    if len(text) != -(-size // 4):
        raise ValueError(f"expected {-(-size // 4)} hex digits for k={k}, got {len(text)}")
    nibbles = np.array([int(ch, 16) for ch in text], dtype=np.uint8)
    bits = (nibbles[:, None] >> np.arange(4)) & 1
    bits = bits.reshape(-1)
    if bits[size:].any():
        raise ValueError("padding bits must be zero")
    return bits[:size].astype(np.uint8)


def predicate_from_truth_table(k: int, bits, name: str | None = None) -> Predicate:
    bits = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if bits.shape != (1 << k,):
        raise ValueError(f"truth table must have length 2^{k}, got {bits.shape[0]}")
    return Predicate(k, bits, name)


def fourier_expansion(pred: Predicate) -> FourierExpansion:
    return pred.fourier


def mean(pred: Predicate) -> Fraction:
    return pred.mean()


def zero_variability(pred: Predicate) -> int:
    """Least number of coordinates whose restriction forces P to 0."""
    pred._require_table()
    if pred.n_satisfying == 1 << pred.k:
        raise ValueError("the constant-1 predicate has no forcing restriction")
    k = pred.k
    # axis a of the reshaped table corresponds to bit k-1-a
    cube = pred.table.reshape((2,) * k)
    for c in range(k + 1):
        for coords in itertools.combinations(range(k), c):
            axes = [k - 1 - j for j in coords]
            for values in itertools.product((0, 1), repeat=c):
                index = [slice(None)] * k
                for ax, v in zip(axes, values):
                    index[ax] = v
                if not cube[tuple(index)].any():
                    return c
    raise AssertionError("unreachable: full restriction of an unsatisfying point")


# --- named families -------------------------------------------------------


def huang_arity(kappa: int) -> int:
    return kappa + math.comb(kappa, 3)


def huang_triples(kappa: int) -> list[tuple[int, int, int]]:
    """Triples of [kappa] (0-based) in the order their bits follow z_1..z_kappa."""
    return list(itertools.combinations(range(kappa), 3))


def _huang_evaluator(kappa: int) -> Callable[[np.ndarray], np.ndarray]:
    triples = np.array(huang_triples(kappa))
    ys = index_to_z(np.arange(1 << kappa), kappa).astype(np.int64)
    y_trip = ys[:, triples[:, 0]] * ys[:, triples[:, 1]] * ys[:, triples[:, 2]]
    full = np.concatenate([ys, y_trip], axis=1)  # strongly satisfying strings
    k = full.shape[1]

    def evaluate(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64)
        out = np.empty(z.shape[0], dtype=np.uint8)
        for lo in range(0, z.shape[0], 4096):
            chunk = z[lo:lo + 4096]
            dist = (k - chunk @ full.T) // 2
            out[lo:lo + 4096] = dist.min(axis=1) <= kappa
        return out

    return evaluate


def _threshold_values(k: int, holds: Callable[[np.ndarray], np.ndarray]) -> Callable:
    def evaluate(z: np.ndarray) -> np.ndarray:
        return holds(np.asarray(z, dtype=np.int64).sum(axis=-1)).astype(np.uint8)

    return evaluate


def _from_evaluator(k: int, evaluate: Callable, name: str, family: str, params: dict) -> Predicate:
    if k <= MAX_TABLE_ARITY:
        table = np.empty(1 << k, dtype=np.uint8)
        step = 1 << 16
        for lo in range(0, 1 << k, step):
            idx = np.arange(lo, min(lo + step, 1 << k))
            table[idx] = evaluate(index_to_z(idx, k))
        return Predicate(k, table, name, family=family, params=params)
    return Predicate(k, None, name, family=family, params=params, evaluator=evaluate)


def _half_sqrt_holds(k: int):
    # S >= -sqrt(k)/2  <=>  S >= 0 or 4 S^2 <= k, exact for integer S
    return lambda s: (s >= 0) | (4 * s * s <= k)


def named_predicate(family: str, **params) -> Predicate:
    """Construct one of the standard predicate families.

    ``xor(k)``, ``or(k)``, ``nae(k)``, ``maj(k)``, ``thr(k, theta)``,
    ``exactly(k, count)``, ``huang(kappa)``, ``i8k(k)``, ``thr_halfsqrt(k)``.
    """
    fam = family.lower().replace("-", "_")
    aliases = {"sat": "or", "kor": "or", "kxor": "xor", "majority": "maj", "threshold": "thr"}
    fam = aliases.get(fam, fam)

    if fam == "huang":
        kappa = int(params["kappa"])
        if not 3 <= kappa <= MAX_HUANG_KAPPA:
            raise ValueError(f"huang needs 3 <= kappa <= {MAX_HUANG_KAPPA}")
        k = huang_arity(kappa)
        return _from_evaluator(k, _huang_evaluator(kappa), f"H_{kappa}", "huang", {"kappa": kappa})

    k = int(params["k"])
    if k < 1:
        raise ValueError("arity must be positive")

    if fam == "i8k":
        if k % 2 == 0:
            raise ValueError("I_8k is defined for odd k")
        thr = _threshold_values(k, lambda s: s >= -1)

        def evaluate(z):
            z = np.asarray(z).reshape(-1, 8, k)
            blocks = thr(z)
            return blocks[:, :4].all(axis=1) & ~blocks[:, 4:].all(axis=1)

        return _from_evaluator(8 * k, evaluate, f"I_{8 * k}", "i8k", {"k": k})

    if fam == "thr_halfsqrt":
        if k % 2 == 0:
            raise ValueError("threshold predicates are defined for odd k")
        return _from_evaluator(
            k, _threshold_values(k, _half_sqrt_holds(k)), f"Thr_{k}^(-sqrt(k)/2)", fam, {"k": k}
        )

    if fam in ("thr", "maj"):
        theta = 1 if fam == "maj" else int(params["theta"])
        if k % 2 == 0:
            raise ValueError("threshold predicates are defined for odd k")
        if not (-k <= theta <= k and (theta - k) % 2 == 0):
            raise ValueError("theta must lie in {-k, -k+2, ..., k}")
        name = f"Maj_{k}" if fam == "maj" else f"Thr_{k}^{theta}"
        ps = {"k": k} if fam == "maj" else {"k": k, "theta": theta}
        return _from_evaluator(k, _threshold_values(k, lambda s: s >= theta), name, fam, ps)

    if fam == "xor":
        # satisfied iff the product of the inputs is -1
        evaluate = _threshold_values(k, lambda s: ((k - s) // 2) % 2 == 1)
        return _from_evaluator(k, evaluate, f"{k}-XOR", fam, {"k": k})
    if fam == "or":
        return _from_evaluator(k, _threshold_values(k, lambda s: s > -k), f"{k}-OR", fam, {"k": k})
    if fam == "nae":
        return _from_evaluator(k, _threshold_values(k, lambda s: np.abs(s) < k), f"NAE_{k}", fam, {"k": k})
    if fam == "exactly":
        count = int(params["count"])
        if not 0 <= count <= k:
            raise ValueError("count must lie in [0, k]")
        evaluate = _threshold_values(k, lambda s: (k + s) // 2 == count)
        return _from_evaluator(k, evaluate, f"Exactly-{count}-of-{k}", fam, {"k": k, "count": count})

    raise ValueError(f"unknown predicate family {family!r}")


def parse_predicate_spec(spec: str) -> Predicate:
    """Parse ``FAMILY[:params]`` strings such as ``xor:3``, ``thr:5,-1``, ``huang:9``."""
    fam, _, rest = spec.partition(":")
    args = [int(a) for a in rest.split(",") if a.strip()] if rest else []
    fam_l = fam.lower()
    if fam_l == "huang":
        return named_predicate("huang", kappa=args[0])
    if fam_l in ("thr", "threshold"):
        return named_predicate("thr", k=args[0], theta=args[1])
    if fam_l == "exactly":
        return named_predicate("exactly", k=args[0], count=args[1])
    if not args:
        raise ValueError(f"predicate spec {spec!r} needs an arity")
    return named_predicate(fam_l, k=args[0])
