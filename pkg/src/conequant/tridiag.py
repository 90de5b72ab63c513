"""Eigenpairs of real symmetric tridiagonal matrices.

Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
iteration.  Only the requested (lowest) eigenpairs are computed, so the cost
is linear in the matrix size.
"""

from __future__ import annotations

import numba
import numpy as np

__all__ = ["SolverError", "sturm_count", "eigvals_bisect", "inverse_iteration", "lowest_eigenpairs"]


class SolverError(RuntimeError):
    pass


@numba.njit(cache=True, nogil=True)
def sturm_count(d, e, x):
    """Number of eigenvalues strictly below ``x``."""
    n = d.shape[0]
    tiny = 1e-300
    count = 0
    q = d[0] - x
    if q < 0:
        count += 1
    for i in range(1, n):
        if q == 0.0:
            q = tiny
        q = d[i] - x - e[i - 1] * e[i - 1] / q
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def _bisect(d, e, index, lo, hi, tol, max_iter):
    # smallest x with count(x) > index
    it = 0
    while hi - lo > tol * max(1.0, abs(lo) + abs(hi)) and it < max_iter:
        mid = 0.5 * (lo + hi)
        if sturm_count(d, e, mid) > index:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi), it


def _gershgorin(d, e):
    off = np.zeros_like(d)
    off[:-1] += np.abs(e)
    off[1:] += np.abs(e)
    return float(np.min(d - off)), float(np.max(d + off))


def eigvals_bisect(d, e, indices, tol: float = 1e-15, max_iter: int = 1100) -> np.ndarray:
    """Eigenvalues with the given 0-based ascending indices."""
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    lo, hi = _gershgorin(d, e)
    out = np.empty(len(indices))
    for j, idx in enumerate(indices):
        if not 0 <= idx < d.size:
            raise ValueError(f"eigenvalue index {idx} out of range")
        lam, it = _bisect(d, e, int(idx), lo, hi, tol, max_iter)
        if it >= max_iter:
            raise SolverError(f"bisection did not converge for eigenvalue {idx}")
        out[j] = lam
    return out


@numba.njit(cache=True, nogil=True)
def _shifted_solve(d, e, lam, b):
    # (T - lam I) x = b by Gaussian elimination with partial pivoting
    n = d.shape[0]
    # zero pivots are replaced by a tiny multiple of the matrix scale; a
    # smaller floor would overflow when lam is an exact eigenvalue
    scale = np.max(np.abs(d - lam))
    if n > 1:
        scale += 2.0 * np.max(np.abs(e))
    eps = 2.2e-16 * max(scale, 1e-300)
    # rows are stored as (a0, a1, a2): coefficients of x_i, x_{i+1}, x_{i+2}
    a0 = np.empty(n)
    a1 = np.empty(n)
    a2 = np.zeros(n)
    rhs = b.copy()
    diag = d - lam
    cur0 = diag[0]
    cur1 = e[0] if n > 1 else 0.0
    for i in range(n - 1):
        sub = e[i]
        nxt0 = diag[i + 1]
        nxt1 = e[i + 1] if i + 2 < n else 0.0
        if abs(cur0) >= abs(sub):
            piv = cur0 if abs(cur0) > eps else (eps if cur0 >= 0.0 else -eps)
            m = sub / piv
            a0[i] = piv
            a1[i] = cur1
            a2[i] = 0.0
            rhs[i + 1] -= m * rhs[i]
            cur0 = nxt0 - m * cur1
            cur1 = nxt1
        else:
            m = cur0 / sub
            a0[i] = sub
            a1[i] = nxt0
            a2[i] = nxt1
            r_i = rhs[i]
            rhs[i] = rhs[i + 1]
            rhs[i + 1] = r_i - m * rhs[i + 1]
            cur0 = cur1 - m * nxt0
            cur1 = -m * nxt1
    a0[n - 1] = cur0 if abs(cur0) > eps else (eps if cur0 >= 0.0 else -eps)
    a1[n - 1] = 0.0
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        s = rhs[i]
        if i + 1 < n:
            s -= a1[i] * x[i + 1]
        if i + 2 < n:
            s -= a2[i] * x[i + 2]
        x[i] = s / a0[i]
    return x


def inverse_iteration(d, e, lam: float, previous=(), n_iter: int = 3, seed: int = 0) -> np.ndarray:
    """Unit eigenvector for eigenvalue ``lam``.

    ``previous`` holds already accepted vectors of nearby eigenvalues; each
    iterate is re-orthogonalised against them twice.
    """
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(d.size)
    x /= np.linalg.norm(x)
    for _ in range(n_iter):
        x = _shifted_solve(d, e, lam, x)
        for _ in range(2):
            for q in previous:
                x -= np.dot(q, x) * q
        nrm = np.linalg.norm(x)
        if not np.isfinite(nrm) or nrm == 0:
            raise SolverError("inverse iteration broke down")
        x /= nrm
    return x


def lowest_eigenpairs(d, e, count: int, cluster_tol: float = 1e-8):
    """The ``count`` lowest eigenvalues and unit eigenvectors (columns)."""
    lams = eigvals_bisect(d, e, range(count))
    scale = max(1.0, float(np.max(np.abs(lams))))
    vecs: list[np.ndarray] = []
    for j, lam in enumerate(lams):
        near = [vecs[i] for i in range(j) if abs(lams[i] - lam) < 1e-3 * scale]
        v = inverse_iteration(d, e, lam, near, seed=j)
        # fixed sign: first significant component positive
        big = np.flatnonzero(np.abs(v) > 1e-3 * np.max(np.abs(v)))
        if big.size and v[big[0]] < 0:
            v = -v
        vecs.append(v)
    return lams, np.column_stack(vecs) if vecs else np.empty((len(d), 0))
