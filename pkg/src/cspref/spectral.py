"""Certified upper bounds on sum_T w(T) x^T over the cube [-1, 1]^n.

Even k: the form is y^T F y with y = x^{(x)k/2}; F is the flattening.
Odd k: split off the last index l, apply Cauchy-Schwarz over l and bound
the resulting quadratic form in y = x^{(x)(k-1)} by the top eigenvalue of
A (diagonal terms removed and added back as sum w^2).

In both cases y is a symmetric tensor, so the matrices may be compressed
to the symmetric subspace (orthonormal orbit-indicator basis).  The
compressed matrices are principal compressions of the originals, hence
their top eigenvalues and norms never exceed the uncompressed ones and the
resulting bounds stay sound.

Every eigenvalue bound is witnessed by a successful Cholesky factorisation
of mu*I - M.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_CAP_DIM",
    "CoefficientTensor",
    "DimensionCapExceeded",
    "NormCertificate",
    "SpectralCertificate",
    "SpectralFailure",
    "certified_norm_upper",
    "certify_form",
    "certify_sum_form",
    "evaluate_form",
    "form_max_bruteforce",
    "odd_matrix",
]

DEFAULT_CAP_DIM = 20_000
DENSE_EIG_MAX = 1_500


class SpectralFailure(RuntimeError):
    """The PSD witness could not be produced at any allowed margin."""


class DimensionCapExceeded(ValueError):
    """The matrix needed for the certificate exceeds the configured side length."""


# --- coefficient tensors ------------------------------------------------------


class CoefficientTensor:
    """Sparse w : [n]^k -> [-1, 1] (0-based tuples).  Duplicate tuples are summed."""

    def __init__(self, k: int, n: int, index, values, *, p: float | None = None, check: bool = True):
        index = np.asarray(index, dtype=np.int64).reshape(-1, k)
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if index.shape[0] != values.shape[0]:
            raise ValueError("index and values disagree in length")
        if index.size and (index.min() < 0 or index.max() >= n):
            raise ValueError("tuple entry outside [n]")
        if index.shape[0]:
            flat = np.ravel_multi_index(index.T, (n,) * k)
            uniq, inv = np.unique(flat, return_inverse=True)
            summed = np.zeros(uniq.size)
            np.add.at(summed, inv, values)
            keep = summed != 0
            index = np.stack(np.unravel_index(uniq[keep], (n,) * k), axis=1).astype(np.int64)
            values = summed[keep]
        if check and values.size and np.abs(values).max() > 1 + 1e-12:
            raise ValueError("coefficients must satisfy |w(T)| <= 1")
        self.k, self.n, self.p = k, n, p
        self.index, self.values = index, values
        self.index.setflags(write=False)
        self.values.setflags(write=False)

    @classmethod
    def from_flat(cls, k: int, n: int, flat_values: np.ndarray, *, p: float | None = None,
                  check: bool = True) -> CoefficientTensor:
        """Build from a dense vector over [n]^k in row-major order (no duplicate handling needed)."""
        nz = np.flatnonzero(flat_values)
        obj = cls.__new__(cls)
        obj.k, obj.n, obj.p = k, n, p
        obj.index = np.stack(np.unravel_index(nz, (n,) * k), axis=1).astype(np.int64).reshape(-1, k)
        obj.values = np.asarray(flat_values[nz], dtype=np.float64)
        if check and obj.values.size and np.abs(obj.values).max() > 1 + 1e-12:
            raise ValueError("coefficients must satisfy |w(T)| <= 1")
        obj.index.setflags(write=False)
        obj.values.setflags(write=False)
        return obj

    @classmethod
    def from_dense(cls, dense: np.ndarray, **kw) -> CoefficientTensor:
        dense = np.asarray(dense, dtype=np.float64)
        nz = np.nonzero(dense)
        return cls(dense.ndim, dense.shape[0], np.stack(nz, axis=1), dense[nz], **kw)

    def __repr__(self):
        return f"CoefficientTensor(k={self.k}, n={self.n}, nnz={self.nnz})"

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def sum_sq(self) -> float:
        return float(np.dot(self.values, self.values))

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.nnz else 0.0

    def scaled(self, factor: float) -> CoefficientTensor:
        return CoefficientTensor(self.k, self.n, self.index, self.values * factor, p=self.p, check=False)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n,) * self.k)
        if self.nnz:
            out[tuple(self.index.T)] = self.values
        return out


def evaluate_form(w: CoefficientTensor, xs) -> np.ndarray:
    """sum_T w(T) x^T for each row of xs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if not w.nnz:
        return np.zeros(xs.shape[0])
    mono = np.ones((xs.shape[0], w.nnz))
    for j in range(w.k):
        mono *= xs[:, w.index[:, j]]
    return mono @ w.values


def form_max_bruteforce(w: CoefficientTensor, block: int = 4096) -> float:
    """Max of the form over {-1,1}^n (equal to the max over the cube: the form is multilinear
    once repeated indices are reduced, and x_i^2 <= 1 terms cannot beat a vertex)."""
    if w.n > 24:
        raise ValueError("brute force needs n <= 24")
    best = -math.inf
    for start in range(0, 1 << w.n, block):
        idx = np.arange(start, min(start + block, 1 << w.n))
        xs = 1 - 2 * ((idx[:, None] >> np.arange(w.n)) & 1)
        best = max(best, float(evaluate_form(w, xs).max()))
    return best


# --- certified eigenvalue bound ---------------------------------------------------


@dataclass
class NormCertificate:
    mu: float  # certified upper bound on lambda_max
    estimate: float
    margin: float
    dim: int
    attempts: int
    method: str
    transcript: list = field(default_factory=list)


def _top_eigenvalue(M: np.ndarray, method: str, seed: int = 0) -> float:
    d = M.shape[0]
    if method == "power":
        return _power_top(M, seed=seed)
    if method == "dense" or (method == "auto" and d <= DENSE_EIG_MAX):
        return float(scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[d - 1, d - 1])[0])
    v0 = np.random.default_rng(seed).standard_normal(d)
    try:
        return float(eigsh(M, k=1, which="LA", tol=1e-10, v0=v0, return_eigenvectors=False)[0])
    except ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            return float(np.max(exc.eigenvalues))
        return _power_top(M, seed=seed)


def _power_top(M: np.ndarray, iters: int = 200, tol: float = 1e-10, seed: int = 0) -> float:
    """Power iteration on M + sI (s a Gershgorin shift) for lambda_max(M)."""
    d = M.shape[0]
    shift = float(np.abs(M).sum(axis=1).max())
    v = np.random.default_rng(seed).standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        u = M @ v + shift * v
        lam = float(v @ u)
        nrm = np.linalg.norm(u)
        if nrm == 0:
            return -shift
        resid = np.linalg.norm(u - lam * v)
        v = u / nrm
        if resid < tol * max(1.0, abs(lam)):
            break
    return lam - shift


def certified_norm_upper(
    M: np.ndarray,
    *,
    method: str = "auto",
    rel_margin: float = 1e-6,
    abs_factor: float = 1e-9,
    max_rel_margin: float = 1e-2,
    overwrite: bool = False,
    symmetry_tol: float = 1e-10,
) -> NormCertificate:
    """Upper bound mu on lambda_max(M) witnessed by a Cholesky factorisation of mu*I - M.

    ``method`` picks the estimator: "auto" (dense for small M, Lanczos otherwise),
    "dense", "lanczos" or "power".  With ``overwrite`` the input buffer is reused.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    d = M.shape[0]
    if d == 0:
        return NormCertificate(0.0, 0.0, 0.0, 0, 0, method)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    fro = float(np.linalg.norm(M))
    asym = float(np.abs(M - M.T).max()) if d <= 4000 else _max_asymmetry(M)
    if asym > symmetry_tol * max(1.0, fro):
        raise ValueError("matrix is not symmetric")

    estimate = _top_eigenvalue(M, method)
    floor = abs_factor * fro + 1e-12
    rel = rel_margin
    transcript = []
    if overwrite:
        work = np.negative(M, out=M)
    else:
        work = np.negative(M)
    neg_diag = work.diagonal().copy()
    attempts = 0
    while rel <= max_rel_margin * (1 + 1e-12):
        if attempts:
            _restore_upper(work)
            np.fill_diagonal(work, neg_diag)
        attempts += 1
        mu = estimate + rel * abs(estimate) + floor
        work[np.diag_indices(d)] += mu
        # factor the Fortran-ordered view in place; only the upper triangle of
        # ``work`` is overwritten, the strict lower one still holds -M
        _, info = lapack.dpotrf(work.T, lower=1, clean=0, overwrite_a=1)
        transcript.append({"mu": mu, "rel_margin": rel, "info": int(info)})
        if info == 0:
            return NormCertificate(mu, estimate, mu - estimate, d, attempts, method, transcript)
        rel *= 2
    raise SpectralFailure(f"PSD witness failed up to relative margin {max_rel_margin}")


def _restore_upper(work: np.ndarray, block: int = 1024) -> None:
    d = work.shape[0]
    for i0 in range(0, d, block):
        i1 = min(i0 + block, d)
        work[i0:i1, i1:] = work[i1:, i0:i1].T
        sub = work[i0:i1, i0:i1]
        up = np.triu_indices(i1 - i0, 1)
        sub[up] = sub.T[up]


def _max_asymmetry(M: np.ndarray, block: int = 2048) -> float:
    worst = 0.0
    for i in range(0, M.shape[0], block):
        worst = max(worst, float(np.abs(M[i : i + block] - M[:, i : i + block].T).max()))
    return worst


# --- symmetric-subspace indexing --------------------------------------------------


def sym_dim(n: int, r: int) -> int:
    return math.comb(n + r - 1, r)


def _sym_rank(sorted_tuples: np.ndarray) -> np.ndarray:
    """Colex rank of sorted (non-decreasing) tuples among multisets of size r."""
    r = sorted_tuples.shape[1]
    rank = np.zeros(sorted_tuples.shape[0], dtype=np.int64)
    for i in range(r):
        b = sorted_tuples[:, i] + i
        rank += _comb_vec(b, i + 1)
    return rank


def _comb_vec(a: np.ndarray, r: int) -> np.ndarray:
    out = np.ones_like(a)
    for j in range(r):
        out = out * (a - j)
    return np.where(a >= r, out // math.factorial(r), 0)


def _orbit_size(sorted_tuples: np.ndarray) -> np.ndarray:
    r = sorted_tuples.shape[1]
    size = np.full(sorted_tuples.shape[0], math.factorial(r), dtype=np.int64)
    run = np.ones(sorted_tuples.shape[0], dtype=np.int64)
    for i in range(1, r):
        same = sorted_tuples[:, i] == sorted_tuples[:, i - 1]
        run = np.where(same, run + 1, 1)
        size //= np.where(same, run, 1)
    return size


# --- certificates ------------------------------------------------------------------


@dataclass
class SpectralCertificate:
    kind: str  # "even" | "odd" | "zero"
    k: int
    n: int
    bound: float
    norm: float
    sum_sq: float | None
    margin: float
    dim: int
    compressed: bool
    estimate: float
    transcript: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self, *, full: bool = False) -> dict:
        out = {
            "kind": self.kind,
            "bound": self.bound,
            "norm": self.norm,
            "sum_sq": self.sum_sq,
            "margin": self.margin,
            "dim": self.dim,
        }
        if full:
            out.update({k: v for k, v in asdict(self).items() if k not in out})
        return out


def required_dim(k: int, n: int, compress: bool = True) -> int:
    r = k // 2 if k % 2 == 0 else k - 1
    return sym_dim(n, r) if compress else n**r


def certify_form(
    w: CoefficientTensor,
    *,
    cap_dim: int = DEFAULT_CAP_DIM,
    compress: bool = True,
    method: str = "auto",
) -> SpectralCertificate:
    """Certified upper bound on max_{|x_i| <= 1} sum_T w(T) x^T."""
    k, n = w.k, w.n
    if k < 2:
        raise ValueError("certify_form needs k >= 2; use certify_sum_form for linear forms")
    start = time.perf_counter()
    kind = "even" if k % 2 == 0 else "odd"
    if not w.nnz:
        return SpectralCertificate(kind, k, n, 0.0, 0.0, 0.0 if kind == "odd" else None, 0.0, 0, compress, 0.0)
    dim = required_dim(k, n, compress)
    if dim > cap_dim:
        raise DimensionCapExceeded(f"matrix side {dim} exceeds cap {cap_dim}")

    if kind == "even":
        F = flattening(w, compress=compress)
        rows, cols = F.shape
        block = np.zeros((rows + cols, rows + cols))
        block[:rows, rows:] = F
        block[rows:, :rows] = F.T
        del F
        cert = certified_norm_upper(block, method=method, overwrite=True)
        mu = cert.mu
        bound = mu * n ** (k // 2)
        sum_sq = None
    else:
        A = odd_matrix_compressed(w) if compress else _symmetrise(odd_matrix(w))
        cert = certified_norm_upper(A, method=method, overwrite=True)
        del A
        mu = cert.mu
        sum_sq = w.sum_sq
        bound = math.sqrt(n) * math.sqrt(max(mu, 0.0) * n ** (k - 1) + sum_sq)
    return SpectralCertificate(
        kind, k, n, bound, mu, sum_sq, cert.margin, cert.dim, compress, cert.estimate,
        cert.transcript, time.perf_counter() - start,
    )


def _symmetrise(M: np.ndarray) -> np.ndarray:
    M += M.T
    M *= 0.5
    return M


def flattening(w: CoefficientTensor, *, compress: bool = True) -> np.ndarray:
    """Matrix F with y^T F y = sum_T w(T) x^T for y = x^{(x)k/2} (even k)."""
    h = w.k // 2
    left, right = w.index[:, :h], w.index[:, h:]
    if not compress:
        side = w.n**h
        F = np.zeros((side, side))
        r = np.ravel_multi_index(left.T, (w.n,) * h)
        c = np.ravel_multi_index(right.T, (w.n,) * h)
        np.add.at(F, (r, c), w.values)
        return F
    side = sym_dim(w.n, h)
    ls, rs = np.sort(left, axis=1), np.sort(right, axis=1)
    scale = 1.0 / np.sqrt(_orbit_size(ls) * _orbit_size(rs).astype(np.float64))
    F = np.zeros((side, side))
    np.add.at(F, (_sym_rank(ls), _sym_rank(rs)), w.values * scale)
    return F


def odd_matrix(w: CoefficientTensor) -> np.ndarray:
    """The n^{k-1} x n^{k-1} matrix A (not symmetrised), for small n.

    Row (i1, i2), column (j1, j2), each block of length (k-1)/2:
    A = sum_l w(i1, j1, l) w(i2, j2, l), zero when (i1, j1) = (i2, j2).
    """
    k, n = w.k, w.n
    if k % 2 == 0:
        raise ValueError("odd_matrix needs odd k")
    h = (k - 1) // 2
    side = n ** (k - 1)
    if side > DEFAULT_CAP_DIM:
        raise DimensionCapExceeded(f"uncompressed side {side} exceeds cap")
    W = w.dense().reshape(side, n)  # rows (i, j), column l
    G = W @ W.T  # G[(i1,j1),(i2,j2)]
    np.fill_diagonal(G, 0.0)
    b = n**h
    return G.reshape(b, b, b, b).transpose(0, 2, 1, 3).reshape(side, side)


def odd_diagonal_term(w: CoefficientTensor, x) -> float:
    """sum_{T} (x^T)^2 sum_l w(T, l)^2 over the first k-1 indices T."""
    x = np.asarray(x, dtype=np.float64)
    mono = np.ones(w.nnz)
    for j in range(w.k - 1):
        mono *= x[w.index[:, j]]
    return float(np.sum(mono**2 * w.values**2))


def odd_matrix_compressed(w: CoefficientTensor) -> np.ndarray:
    """Symmetrised compression of A onto the symmetric subspace of [n]^{k-1}."""
    if w.k == 3 and w.n <= 400:
        C = _odd3_dense(w)
    else:
        C = _odd_pairs(w)
    return _symmetrise(C)


def _odd3_dense(w: CoefficientTensor) -> np.ndarray:
    n = w.n
    W = w.dense()  # W[a, b, l]
    cd, cb = np.tril_indices(n)  # columns (b, d) with b <= d, in colex order
    diag_col = cb == cd
    # a column (b, d) collects X[b, d] (b < d) or X[b, b] / 2, divided by sqrt(N_beta)
    col_scale = np.where(diag_col, 0.5, 1.0 / math.sqrt(2.0))
    d = cb.size
    C = np.empty((d, d))
    sq = np.einsum("abl,abl->ab", W, W)
    for a in range(n):
        # M[b, c, d] = sum_l w(a, b, l) w(c, d, l) for c >= a
        M = (W[a] @ W[a:].reshape(-1, n).T).reshape(n, n - a, n).transpose(1, 0, 2)
        X = M + M.transpose(0, 2, 1)
        rows = X[:, cb, cd] * col_scale
        del M, X
        rows[1:] *= math.sqrt(2.0)  # two orderings of (a, c) over sqrt(N_alpha = 2)
        rows[0, diag_col] -= sq[a]  # excluded terms at ((a, a), (b, b))
        C[_sym_rank(np.stack([np.full(n - a, a), np.arange(a, n)], axis=1))] = rows
    return C


def _odd_pairs(w: CoefficientTensor, chunk: int = 2_000_000) -> np.ndarray:
    k, n = w.k, w.n
    h = (k - 1) // 2
    d = sym_dim(n, k - 1)
    C = np.zeros(d * d)
    order = np.argsort(w.index[:, -1], kind="stable")
    idx, vals = w.index[order], w.values[order]
    bounds = np.flatnonzero(np.diff(idx[:, -1])) + 1
    for lo, hi in zip(np.r_[0, bounds], np.r_[bounds, idx.shape[0]]):
        r = hi - lo
        if r < 2:
            continue
        I, J, V = idx[lo:hi, :h], idx[lo:hi, h : 2 * h], vals[lo:hi]
        p_all, q_all = np.nonzero(~np.eye(r, dtype=bool))
        for s in range(0, p_all.size, chunk):
            p, q = p_all[s : s + chunk], q_all[s : s + chunk]
            ra = np.sort(np.concatenate([I[p], I[q]], axis=1), axis=1)
            cb = np.sort(np.concatenate([J[p], J[q]], axis=1), axis=1)
            scale = 1.0 / np.sqrt(_orbit_size(ra) * _orbit_size(cb).astype(np.float64))
            flat = _sym_rank(ra) * d + _sym_rank(cb)
            np.add.at(C, flat, V[p] * V[q] * scale)
    return C.reshape(d, d)


def certify_sum_form(
    v: CoefficientTensor,
    s: int | None = None,
    scale: float | None = None,
    *,
    cap_dim: int = DEFAULT_CAP_DIM,
    compress: bool = True,
    method: str = "auto",
) -> tuple[float, SpectralCertificate | None]:
    """Bound on max_{|x_i| <= 1} sum_U v_U x^U for arbitrary real v.

    s = 1 uses sum |v_i|; s >= 2 rescales by ``scale`` (default max |v_U|)
    and calls certify_form.  Returns (bound, certificate or None).
    """
    s = v.k if s is None else s
    if s != v.k:
        raise ValueError("s must equal the tensor arity")
    if not v.nnz:
        return 0.0, None
    if s == 1:
        return float(np.abs(v.values).sum()), None
    scale = v.max_abs if scale is None else float(scale)
    if scale < v.max_abs:
        raise ValueError("scale must dominate max |v_U|")
    cert = certify_form(v.scaled(1.0 / scale), cap_dim=cap_dim, compress=compress, method=method)
    return cert.bound * scale, cert
