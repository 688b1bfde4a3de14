import itertools

import numpy as np
import pytest

from cspref.instances import sample_fixed_m
from cspref.predicates import named_predicate
from cspref.spectral import (
    CoefficientTensor,
    DimensionCapExceeded,
    certified_norm_upper,
    certify_form,
    certify_sum_form,
    evaluate_form,
    form_max_bruteforce,
    odd_diagonal_term,
    odd_matrix,
    odd_matrix_compressed,
    sym_dim,
)
from cspref.spectral import _odd3_dense, _odd_pairs


def random_tensor(n, k, p, seed, values=(-1.0, 1.0)):
    rng = np.random.default_rng(seed)
    N = n**k
    count = rng.binomial(N, p)
    flat = rng.choice(N, count, replace=False)
    v = np.zeros(N)
    v[flat] = rng.choice(values, count)
    return CoefficientTensor.from_flat(k, n, v)


def test_zero_tensor():
    w = CoefficientTensor(3, 5, np.zeros((0, 3), dtype=int), [])
    assert certify_form(w).bound == 0


def test_single_entry_k2():
    w = CoefficientTensor(2, 2, [[0, 1]], [1.0])
    cert = certify_form(w)
    assert cert.norm == pytest.approx(1.0, rel=1e-5)
    assert cert.bound == pytest.approx(2.0, rel=1e-5)
    assert cert.bound >= form_max_bruteforce(w) == 1


def test_duplicates_summed_and_bounded():
    w = CoefficientTensor(2, 3, [[0, 1], [0, 1]], [0.5, 0.25])
    assert w.nnz == 1 and w.values[0] == 0.75
    with pytest.raises(ValueError):
        CoefficientTensor(2, 3, [[0, 1], [0, 1]], [0.75, 0.5])


def test_three_xor_instances_sound():
    P = named_predicate("xor", k=3)
    for seed in range(100):
        inst = sample_fixed_m(P, 10, 60, seed)
        sign = np.prod(inst.negs.astype(float), axis=1)
        w = CoefficientTensor(3, 10, inst.scopes.astype(int), -sign / 8)
        assert certify_form(w).bound >= form_max_bruteforce(w) - 1e-9


@pytest.mark.parametrize("k,n", [(2, 12), (3, 10), (4, 8), (3, 14), (4, 6)])
def test_soundness_random_tensors(k, n):
    for seed in range(6):
        w = random_tensor(n, k, 0.3, seed, values=(-1.0, -0.5, 0.5, 1.0))
        truth = form_max_bruteforce(w)
        for compress in (True, False):
            if not compress and n ** (k - 1 if k % 2 else k // 2) > 3000:
                continue
            assert certify_form(w, compress=compress).bound >= truth - 1e-9


def test_scaling_equivariance():
    w = random_tensor(9, 3, 0.2, 0)
    base = certify_form(w).bound
    for c in (0.25, 0.5):
        assert certify_form(w.scaled(c)).bound == pytest.approx(c * base, rel=1e-4)


def test_compressed_bound_not_larger():
    for k in (3, 4):
        w = random_tensor(7, k, 0.3, k)
        assert certify_form(w, compress=True).bound <= certify_form(w, compress=False).bound * (1 + 1e-5)


def test_cap_dimension():
    w = random_tensor(30, 3, 0.01, 0)
    assert sym_dim(30, 2) == 465
    with pytest.raises(DimensionCapExceeded):
        certify_form(w, cap_dim=400)


def test_norm_certificate_examples():
    assert certified_norm_upper(np.zeros((3, 3))).mu == pytest.approx(0.0, abs=1e-9)
    mu = certified_norm_upper(np.diag([3.0, 1.0])).mu
    assert 3.0 <= mu <= 3.0004
    rng = np.random.default_rng(1)
    M = rng.choice([-1.0, 1.0], (200, 200))
    M = np.triu(M) + np.triu(M, 1).T
    lam = np.linalg.eigvalsh(M)[-1]
    for method in ("auto", "lanczos"):
        cert = certified_norm_upper(M, method=method)
        assert lam <= cert.mu <= 1.001 * lam
    with pytest.raises(ValueError):
        certified_norm_upper(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_power_estimator_on_easy_spectrum():
    mu = certified_norm_upper(np.diag([5.0, 1.0, 0.5]), method="power").mu
    assert 5.0 <= mu <= 5.001


def test_sum_form_examples():
    v = CoefficientTensor(1, 3, [[0], [1], [2]], [1.0, -2.0, 3.0], check=False)
    assert certify_sum_form(v, 1)[0] == 6
    z = CoefficientTensor(2, 4, np.zeros((0, 2), dtype=int), [])
    assert certify_sum_form(z, 2)[0] == 0
    rng = np.random.default_rng(5)
    for seed in range(5):
        idx = rng.integers(0, 8, size=(20, 2))
        vals = rng.integers(-3, 4, size=20).astype(float)
        v = CoefficientTensor(2, 8, idx, vals, check=False)
        if not v.nnz:
            continue
        bound, _ = certify_sum_form(v, 2)
        assert bound >= form_max_bruteforce(v) - 1e-9


def test_odd_decomposition_identity():
    rng = np.random.default_rng(2)
    for k, n in ((3, 8), (5, 4)):
        w = random_tensor(n, k, 0.4, k, values=(-1.0, 0.5, 1.0))
        A = odd_matrix(w)
        W = w.dense().reshape(-1, n)
        for _ in range(5):
            x = rng.choice([-1.0, 1.0], n)
            y = x
            for _ in range(k - 2):
                y = np.kron(y, x)
            direct = float(np.sum((y @ W) ** 2))
            assert direct == pytest.approx(y @ A @ y + odd_diagonal_term(w, x), rel=1e-12)


def test_compressed_odd_paths_agree():
    w = random_tensor(7, 3, 0.25, 11)
    assert np.abs(_odd3_dense(w) - _odd_pairs(w)).max() < 1e-12
    full = odd_matrix(w)
    lam_full = np.linalg.eigvalsh((full + full.T) / 2)[-1]
    lam_comp = np.linalg.eigvalsh(odd_matrix_compressed(w))[-1]
    assert lam_comp <= lam_full + 1e-9


def test_evaluate_form_matches_dense():
    w = random_tensor(5, 3, 0.3, 4)
    D = w.dense()
    for x in itertools.islice(itertools.product([-1, 1], repeat=5), 10):
        x = np.array(x, dtype=float)
        assert evaluate_form(w, x)[0] == pytest.approx(np.einsum("abc,a,b,c->", D, x, x, x))


def test_bound_magnitude_slope():
    # bound ~ sqrt(p) n^{3k/4} up to logs: slope 9/4 at fixed p for k = 3
    ns = [20, 40, 60, 80, 100, 120]
    bounds = []
    for n in ns:
        seeds = 2 if n <= 100 else 1
        bounds.append(np.mean([certify_form(random_tensor(n, 3, 0.1, s)).bound for s in range(seeds)]))
    slope = np.polyfit(np.log(ns), np.log(bounds), 1)[0]
    assert abs(slope - 9 / 4) <= 0.2
