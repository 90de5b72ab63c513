"""Gamma, Bessel J of real order and generalized Laguerre polynomials.

All routines accept scalars or numpy arrays for the argument.  The
:class:`BesselJ` and :class:`Laguerre` expression nodes plug these functions
into :mod:`conequant.jetcalc` so closed-form wave functions can be
differentiated.
"""

from __future__ import annotations

import math

import numpy as np

from .jetcalc import ONE, ZERO, Const, Expr, Special, _wrap, add, div, mul, neg

__all__ = ["PoleError", "gamma_fn", "bessel_j", "laguerre", "BesselJ", "Laguerre", "besselj", "laguerre_expr"]


class PoleError(ValueError):
    pass


# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _gamma_scalar(x: float) -> float:
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _gamma_scalar(1.0 - x))
    if float(x).is_integer() and x <= 171:
        return float(math.factorial(int(x) - 1))
    x -= 1.0
    a = _LANCZOS[0]
    t = x + _LANCZOS_G + 0.5
    for i in range(1, 9):
        a += _LANCZOS[i] / (x + i)
    # split the power so t**(x+0.5) does not overflow before exp(-t) applies
    half = t ** (0.5 * (x + 0.5))
    return math.sqrt(2 * math.pi) * half * (half * math.exp(-t)) * a


def gamma_fn(x):
    """Gamma function by the Lanczos approximation with reflection."""
    if np.ndim(x) == 0:
        return _gamma_scalar(float(x))
    return np.vectorize(_gamma_scalar, otypes=[float])(x)


# ---------------------------------------------------------------------------
# Bessel J_nu(x), nu > -1, x >= 0

_SERIES_X = 10.0
_MAX_TERMS = 200


def _bessel_series(nu: float, x: float) -> float:
    """Power series with Kahan summation; accurate for moderate x."""
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    q = -0.25 * x * x
    term = 1.0
    total, comp = 1.0, 0.0
    for m in range(1, _MAX_TERMS):
        term *= q / (m * (m + nu))
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if abs(term) < 1e-17 * abs(total):
            break
    else:
        raise ArithmeticError(f"Bessel series did not converge for nu={nu}, x={x}")
    return total * (0.5 * x) ** nu / _gamma_scalar(nu + 1.0)


def _bessel_miller(nu: float, x: float) -> float:
    """Backward recurrence normalised by the Neumann-type sum rule.

    Uses (x/2)**nu = Gamma(nu+1) * sum_k c_k J_{nu+2k}(x) with c_0 = 1 and
    c_k = (nu + 2k) Gamma(nu+k) / (Gamma(nu+1) k!) for k >= 1.
    """
    top = int(x + 40 + 2 * math.sqrt(40 * x)) + int(nu)
    top += top % 2  # the sum rule needs J_{nu + even}
    j_hi, j = 0.0, 1e-300
    norm = 0.0
    # walk m = top .. 0 on orders nu + m; accumulate even-offset terms
    weights = np.empty(top // 2 + 1)
    weights[0] = 1.0
    b = 1.0
    for k in range(1, top // 2 + 1):
        if k > 1:
            b *= (nu + k - 1) / k
        weights[k] = (nu + 2 * k) * b
    val_at_nu = 0.0
    for m in range(top, -1, -1):
        if m % 2 == 0:
            norm += weights[m // 2] * j
        if m == 0:
            val_at_nu = j
            break
        order = nu + m
        j_lo = (2.0 * order / x) * j - j_hi
        j_hi, j = j, j_lo
        if abs(j) > 1e250:  # rescale to avoid overflow
            j *= 1e-250
            j_hi *= 1e-250
            norm *= 1e-250
    scale = (0.5 * x) ** nu / _gamma_scalar(nu + 1.0)
    return val_at_nu / norm * scale


def _bessel_scalar(nu: float, x: float) -> float:
    # orders in (-1, 0) are allowed so that recurrences can reach below zero
    if not nu > -1:
        raise ValueError("order must exceed -1")
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if nu < 0 and x == 0:
        raise ValueError("J_nu is unbounded at 0 for negative order")
    if x <= _SERIES_X:
        return _bessel_series(nu, x)
    if nu < 0:
        return 2 * (nu + 1) / x * _bessel_miller(nu + 1, x) - _bessel_miller(nu + 2, x)
    return _bessel_miller(nu, x)


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_nu(x) for nu > -1, x >= 0.

    Power series for x <= 10, Miller backward recurrence beyond.
    """
    if np.ndim(x) == 0:
        return _bessel_scalar(float(nu), float(x))
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    flat = out.reshape(-1)
    for i, xi in enumerate(x.reshape(-1)):
        flat[i] = _bessel_scalar(float(nu), float(xi))
    return out


# ---------------------------------------------------------------------------
# generalized Laguerre L_n^mu(x)


def laguerre(n: int, mu: float, x):
    """Generalized Laguerre polynomial by upward three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
    prev = 1.0 + 0.0 * x
    if n == 0:
        return prev
    cur = 1.0 + mu - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 + mu - x) * cur - (m + mu) * prev) / (m + 1)
    return cur


# ---------------------------------------------------------------------------
# expression nodes


class BesselJ(Special):
    """J_nu(arg); the argument must stay positive where derivatives are taken."""

    def __init__(self, nu: float, arg: Expr):
        super().__init__(arg)
        self.nu = float(nu)

    def derivatives(self, x):
        nu = self.nu
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            from .jetcalc import EvaluationError

            raise EvaluationError("Bessel derivatives need a positive argument")
        j0 = bessel_j(nu, x)
        j1 = bessel_j(nu + 1, x)
        j2 = bessel_j(nu + 2, x)
        d1 = (nu / x) * j0 - j1
        # derivative of (nu/x) J_nu - J_{nu+1}
        d2 = -nu / x**2 * j0 + (nu / x) * d1 - ((nu + 1) / x * j1 - j2)
        return j0, d1, d2

    def outer_derivative(self):
        return add(mul(div(Const(self.nu), self.arg), self), neg(BesselJ(self.nu + 1, self.arg)))

    def __str__(self):
        return f"J[{self.nu:g}]({self.arg})"


class Laguerre(Special):
    def __init__(self, n: int, mu: float, arg: Expr):
        super().__init__(arg)
        self.n, self.mu = int(n), float(mu)

    def derivatives(self, x):
        n, mu = self.n, self.mu
        f0 = laguerre(n, mu, x)
        f1 = -laguerre(n - 1, mu + 1, x) if n >= 1 else 0.0 * x
        f2 = laguerre(n - 2, mu + 2, x) if n >= 2 else 0.0 * x
        return f0, f1, f2

    def outer_derivative(self):
        if self.n == 0:
            return ZERO
        return neg(Laguerre(self.n - 1, self.mu + 1, self.arg))

    def __str__(self):
        return f"L[{self.n},{self.mu:g}]({self.arg})"


def besselj(nu: float, arg) -> Expr:
    return BesselJ(nu, _wrap(arg))


def laguerre_expr(n: int, mu: float, arg) -> Expr:
    if n == 0:
        return ONE
    return Laguerre(n, mu, _wrap(arg))
