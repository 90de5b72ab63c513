import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from conequant.tridiag import eigvals_bisect, inverse_iteration, lowest_eigenpairs, sturm_count


def _laplacian(n):
    return np.full(n, 2.0), np.full(n - 1, -1.0)


def test_laplacian_eigenvalues():
    n = 50
    d, e = _laplacian(n)
    want = 2 - 2 * np.cos(np.pi * np.arange(1, 6) / (n + 1))
    np.testing.assert_allclose(eigvals_bisect(d, e, range(5)), want, rtol=1e-13)


def test_sturm_count_brackets():
    d, e = _laplacian(30)
    lams = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    for j, lam in enumerate(lams):
        assert sturm_count(d, e, lam - 1e-9) == j
        assert sturm_count(d, e, lam + 1e-9) == j + 1
    assert sturm_count(d, e, -10.0) == 0 and sturm_count(d, e, 10.0) == 30


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 60), st.integers(0, 2**31))
def test_against_scipy(n, seed):
    rng = np.random.default_rng(seed)
    d, e = rng.normal(size=n), rng.normal(size=n - 1)
    count = min(n, 6)
    want, wvec = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    lams, vecs = lowest_eigenpairs(d, e, count)
    np.testing.assert_allclose(lams, want, atol=1e-12 * (1 + np.max(np.abs(want))))
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.max(np.abs(T @ vecs - vecs * lams)) <= 1e-8
    assert np.max(np.abs(vecs.T @ vecs - np.eye(count))) <= 1e-8


def test_degenerate_pair_orthogonalised():
    # two decoupled identical blocks
    d = np.array([2.0, 2.0, 2.0, 2.0, 2.0, 2.0])
    e = np.array([-1.0, -1.0, 0.0, -1.0, -1.0])
    lams, vecs = lowest_eigenpairs(d, e, 2)
    assert lams[0] == pytest.approx(lams[1], abs=1e-14)
    assert abs(vecs[:, 0] @ vecs[:, 1]) <= 1e-12


def test_inverse_iteration_unit_vector():
    d, e = _laplacian(40)
    lam = eigvals_bisect(d, e, [0])[0]
    v = inverse_iteration(d, e, lam)
    assert np.linalg.norm(v) == pytest.approx(1)
    exact = np.sin(np.pi * np.arange(1, 41) / 41)
    exact /= np.linalg.norm(exact)
    assert abs(abs(v @ exact) - 1) <= 1e-12
