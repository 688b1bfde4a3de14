"""Random k-uniform hypergraphs: independence-number and chromatic-number certificates.

With w(T_e) = p - 1[e in E] on the sorted tuple of every k-set e (and 0 on
all other tuples), the indicator x of an independent set I gives
sum_T w(T) x^T = p * C(|I|, k).  A spectral bound B on the form therefore
certifies alpha(H) < beta for the least beta with p * C(beta, k) > B.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .instances import make_rng
from .spectral import DEFAULT_CAP_DIM, CoefficientTensor, certify_form

__all__ = [
    "ChromaticVerdict",
    "Hypergraph",
    "IndependenceCertificate",
    "certify_chromatic",
    "certify_independence",
    "exact_independence_number",
    "is_colorable",
    "sample_hypergraph",
]

MAX_UNIFORMITY = 8


class Hypergraph:
    """k-uniform hypergraph on vertices 0..n-1; edges stored as sorted rows."""

    def __init__(self, n: int, k: int, edges, meta: dict | None = None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, k)
        if edges.size:
            edges = np.sort(edges, axis=1)
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge vertex outside [n]")
            if np.any(np.diff(edges, axis=1) == 0):
                raise ValueError("edges must have k distinct vertices")
            uniq = np.unique(edges, axis=0)
            if uniq.shape[0] != edges.shape[0]:
                raise ValueError("duplicate edge")
            edges = uniq
        self.n, self.k = int(n), int(k)
        self.edges = edges
        self.edges.setflags(write=False)
        self.meta = dict(meta or {})

    def __repr__(self):
        return f"Hypergraph(n={self.n}, k={self.k}, edges={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def expected_edges(self) -> float | None:
        p = self.meta.get("p")
        return None if p is None else p * math.comb(self.n, self.k)

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "edges": (self.edges + 1).tolist(), "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, data: dict) -> Hypergraph:
        k = int(data["k"])
        edges = np.array(data["edges"], dtype=np.int64).reshape(-1, k) - 1
        return cls(int(data["n"]), k, edges, data.get("meta"))

    def to_edge_list(self) -> str:
        return "".join(" ".join(str(v + 1) for v in e) + "\n" for e in self.edges)

    @classmethod
    def from_edge_list(cls, text: str, n: int | None = None, k: int | None = None) -> Hypergraph:
        """One 1-based k-tuple per line; blank lines and '#' comments are skipped."""
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append([int(tok) for tok in line.replace(",", " ").split()])
        if k is None:
            if not rows:
                raise ValueError("empty edge list needs an explicit k")
            k = len(rows[0])
        if any(len(r) != k for r in rows):
            raise ValueError("all edges must have the same size")
        edges = np.array(rows, dtype=np.int64).reshape(-1, k) - 1
        if n is None:
            n = int(edges.max()) + 1 if edges.size else k
        return cls(n, k, edges)

    def edge_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in e) for e in self.edges}


def _unrank_colex(ranks: np.ndarray, n: int, k: int) -> np.ndarray:
    """k-subsets of [n] (sorted rows) with the given colex ranks."""
    out = np.empty((ranks.size, k), dtype=np.int64)
    rest = ranks.astype(np.int64).copy()
    for i in range(k, 0, -1):
        table = np.array([math.comb(c, i) for c in range(n)], dtype=np.int64)
        c = np.searchsorted(table, rest, side="right") - 1
        out[:, i - 1] = c
        rest -= table[c]
    return out


def sample_hypergraph(n: int, p: float, k: int, seed) -> Hypergraph:
    """Each of the C(n, k) edges independently with probability p."""
    if not 3 <= k <= MAX_UNIFORMITY:
        raise ValueError(f"uniformity must lie in [3, {MAX_UNIFORMITY}]")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    total = math.comb(n, k)
    if total >= 2**62:
        raise OverflowError("too many potential edges")
    rng = make_rng(seed)
    count = int(rng.binomial(total, p))
    ranks = np.sort(rng.choice(total, size=count, replace=False)) if count < total else np.arange(total)
    edges = _unrank_colex(ranks, n, k)
    return Hypergraph(n, k, edges, {"p": p, "seed": seed})


# --- certificates ------------------------------------------------------------------------


@dataclass
class IndependenceCertificate:
    bound: float  # B
    beta: int  # alpha(H) <= beta - 1
    p: float
    n: int
    k: int
    spectral: dict = field(default_factory=dict)

    @property
    def alpha_upper(self) -> int:
        return self.beta - 1

    def to_dict(self) -> dict:
        return {"bound": self.bound, "beta": self.beta, "alpha_upper": self.alpha_upper,
                "p": self.p, "n": self.n, "k": self.k, "spectral": self.spectral}


def independence_tensor(H: Hypergraph, p: float) -> CoefficientTensor:
    """w(T_e) = p - 1[e in E] on sorted tuples of all k-sets, zero elsewhere."""
    all_sets = np.array(list(itertools.combinations(range(H.n), H.k)), dtype=np.int64).reshape(-1, H.k)
    vals = np.full(all_sets.shape[0], float(p))
    if H.n_edges:
        flat_all = np.ravel_multi_index(all_sets.T, (H.n,) * H.k)
        flat_e = np.ravel_multi_index(H.edges.T, (H.n,) * H.k)
        vals[np.isin(flat_all, flat_e)] -= 1.0
    return CoefficientTensor(H.k, H.n, all_sets, vals, p=p)


def _beta_for(bound: float, p: float, k: int, n: int) -> int:
    """Least b with p * C(b, k) > bound (bisection; may exceed n)."""
    lo, hi = 0, max(k, n + 1)
    while p * math.comb(hi, k) <= bound:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if p * math.comb(mid, k) > bound:
            hi = mid
        else:
            lo = mid + 1
    return lo


def certify_independence(H: Hypergraph, p: float | None = None, *, cap_dim: int = DEFAULT_CAP_DIM) -> IndependenceCertificate:
    p = H.meta.get("p") if p is None else p
    if p is None:
        raise ValueError("p is required for hypergraphs without sampling metadata")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    w = independence_tensor(H, p)
    cert = certify_form(w, cap_dim=cap_dim)
    beta = _beta_for(cert.bound, p, H.k, H.n)
    return IndependenceCertificate(cert.bound, beta, p, H.n, H.k, cert.to_dict())


@dataclass
class ChromaticVerdict:
    certified: bool  # True means chi(H) > xi
    xi: int
    threshold: int  # ceil(n / xi)
    independence: IndependenceCertificate

    def to_dict(self) -> dict:
        return {"certified": self.certified, "xi": self.xi, "threshold": self.threshold,
                "independence": self.independence.to_dict()}


def certify_chromatic(H: Hypergraph, p: float | None = None, xi: int = 2, *,
                      cap_dim: int = DEFAULT_CAP_DIM) -> ChromaticVerdict:
    """chi(H) > xi is certified when beta <= ceil(n / xi): some colour class would be too large."""
    if xi < 2:
        raise ValueError("xi must be at least 2")
    ind = certify_independence(H, p, cap_dim=cap_dim)
    threshold = -(-H.n // xi)
    return ChromaticVerdict(ind.beta <= threshold, xi, threshold, ind)


# --- exact oracles (tiny n) -----------------------------------------------------------------


def exact_independence_number(H: Hypergraph) -> int:
    if H.n > 24:
        raise ValueError("exhaustive search needs n <= 24")
    if not H.n_edges:
        return H.n
    edge_masks = (1 << H.edges).sum(axis=1)
    best = 0
    block = 1 << min(H.n, 16)
    for lo in range(0, 1 << H.n, block):
        subsets = np.arange(lo, min(lo + block, 1 << H.n), dtype=np.int64)
        bad = np.zeros(subsets.size, dtype=bool)
        for em in edge_masks:
            bad |= (subsets & em) == em
        good = subsets[~bad]
        if good.size:
            best = max(best, int(np.bitwise_count(good).max()))
    return best


def is_colorable(H: Hypergraph, colors: int) -> bool:
    """Backtracking test for a proper colouring (no monochromatic edge)."""
    by_last: list[list[tuple[int, ...]]] = [[] for _ in range(H.n)]
    for e in H.edges:
        by_last[int(e[-1])].append(tuple(int(v) for v in e[:-1]))
    assign = [-1] * H.n

    def place(v: int, used: int) -> bool:
        if v == H.n:
            return True
        for c in range(min(colors, used + 1)):  # symmetry breaking on fresh colours
            if all(any(assign[u] != c for u in rest) for rest in by_last[v]):
                assign[v] = c
                if place(v + 1, max(used, c + 1)):
                    return True
        assign[v] = -1
        return False

    return place(0, 0)


def exact_chromatic_number(H: Hypergraph, limit: int | None = None) -> int:
    limit = H.n if limit is None else limit
    for c in range(1, limit + 1):
        if is_colorable(H, c):
            return c
    return limit + 1
