"""Schrodinger equations on the double cone and their radial bound states.

Four equations are handled, all of the form::

    2i psi_t + psi_rr + psi_r / r + a psi_phiphi / r**2 - (b / r**2 + w**2 r**2) psi = 0

=================  ===========  =======  ======
variant            a            b        w
=================  ===========  =======  ======
NOETHER_FREE       1/k**2       0        0
NOETHER_HO         1/k**2       0        omega
KOWALSKI_FREE      1/(4 k**2)   1/4      0
KOWALSKI_HO        1/(4 k**2)   1/4      omega
=================  ===========  =======  ======

The ansatz ``psi = R(r) exp(-i(E t + p phi))`` reduces each of them to
``R'' + R'/r + (2E - mu**2/r**2 - w**2 r**2) R = 0`` with the effective index
``mu = sqrt(a p**2 + b)``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jetcalc as jc
from .conemodel import Model, ModelParams
from .specfun import besselj, laguerre_expr
from .tridiag import eigvals_bisect, lowest_eigenpairs

__all__ = [
    "Variant",
    "PdeVariant",
    "ModeNumbers",
    "RadialProblem",
    "Eigenpair",
    "TailWarning",
    "pde_lhs",
    "pde_residual",
    "effective_index",
    "reduce_radial",
    "solve_bound_states",
    "auto_r_max",
    "closed_form_eigenfunction",
    "bessel_solution",
    "inner_product",
    "continuum_check",
    "noether_energy",
    "kowalski_printed_energy",
    "oscillator_energy",
]

CHART = ("t", "r", "phi")


class TailWarning(UserWarning):
    """Integrand or eigenfunction has not decayed at the outer radius."""


class Variant(str, enum.Enum):
    NOETHER_FREE = "noether_free"
    NOETHER_HO = "noether_ho"
    KOWALSKI_FREE = "kowalski_free"
    KOWALSKI_HO = "kowalski_ho"

    @property
    def is_ho(self) -> bool:
        return self in (Variant.NOETHER_HO, Variant.KOWALSKI_HO)

    @property
    def is_kowalski(self) -> bool:
        return self in (Variant.KOWALSKI_FREE, Variant.KOWALSKI_HO)


@dataclass(frozen=True)
class PdeVariant:
    tag: Variant
    params: ModelParams

    def __post_init__(self):
        object.__setattr__(self, "tag", Variant(self.tag))
        if self.tag.is_ho != (self.params.model is Model.HARMONIC):
            raise ValueError(f"{self.tag.value} needs {'harmonic' if self.tag.is_ho else 'free'} parameters")

    @classmethod
    def make(cls, tag, k: float, omega: float | None = None) -> "PdeVariant":
        tag = Variant(tag)
        params = ModelParams.harmonic(k, omega) if tag.is_ho else ModelParams.free(k)
        return cls(tag, params)

    @property
    def k(self) -> float:
        return self.params.k

    @property
    def omega(self) -> float:
        return self.params.omega if self.tag.is_ho else 0.0

    @property
    def angular_coeff(self) -> float:
        k2 = self.params.k**2
        return 1.0 / (4.0 * k2) if self.tag.is_kowalski else 1.0 / k2

    @property
    def inverse_square(self) -> float:
        return 0.25 if self.tag.is_kowalski else 0.0


@dataclass(frozen=True)
class ModeNumbers:
    p: int
    epsilon: float | None = None
    n: int | None = None

    def __post_init__(self):
        if int(self.p) != self.p:
            raise ValueError("p must be an integer for 2 pi periodicity")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n is not None and self.n < 0:
            raise ValueError("n must be nonnegative")


@dataclass(frozen=True)
class RadialProblem:
    """R'' + R'/r + (2E - mu_eff**2/r**2 - omega**2 r**2) R = 0."""

    mu_eff: float
    omega: float
    variant: Variant
    p: int
    k: float
    energy_symbol: str = "E"


@dataclass
class Eigenpair:
    """Bound state on a cell-centred grid ``r = (i - 1/2) h``.

    ``chi = sqrt(r) R`` is scaled so that the cone norm
    ``4 pi * h * sum(chi**2)`` (even extension to both nappes) equals one.
    """

    E: float
    chi: np.ndarray
    r: np.ndarray
    h: float
    r_max: float
    n: int
    E_levels: tuple = ()
    boundary_warning: bool = False

    def radial(self) -> np.ndarray:
        return self.chi / np.sqrt(self.r)


# ---------------------------------------------------------------------------
# equations


def pde_lhs(variant: PdeVariant, jet: jc.Jet, points) -> np.ndarray:
    """Left-hand side of the variant's equation from a jet over (t, r, phi)."""
    r = np.asarray(points, dtype=float)[1]
    if np.any(r == 0):
        raise jc.EvaluationError("the equation is singular at the vertex r = 0")
    psi, g, H = jet.value, jet.grad, jet.hess
    w2 = variant.omega**2
    return (
        2j * g[0]
        + H[1, 1]
        + g[1] / r
        + variant.angular_coeff * H[2, 2] / r**2
        - (variant.inverse_square / r**2 + w2 * r**2) * psi
    )


def pde_residual(variant: PdeVariant, psi: jc.ScalarField, points) -> np.ndarray:
    """Equation residual of a closed-form wave function at point(s) (t, r, phi)."""
    return pde_lhs(variant, jc.eval_jet(psi, points, 2), points)


def effective_index(variant, p: int, k: float) -> float:
    tag = variant.tag if isinstance(variant, PdeVariant) else Variant(variant)
    if int(p) != p:
        raise ValueError("p must be an integer")
    if tag.is_kowalski:
        return math.sqrt(p * p / (4.0 * k * k) + 0.25)
    return abs(p) / k


def reduce_radial(variant: PdeVariant, modes: ModeNumbers) -> RadialProblem:
    return RadialProblem(
        mu_eff=effective_index(variant, modes.p, variant.k),
        omega=variant.omega,
        variant=variant.tag,
        p=int(modes.p),
        k=variant.k,
        energy_symbol="E" if variant.tag.is_ho else "epsilon",
    )


def oscillator_energy(n: int, mu: float, omega: float) -> float:
    """Level of the planar radial oscillator with index mu."""
    return omega * (2 * n + mu + 1)


def noether_energy(n: int, p: int, k: float, omega: float) -> float:
    return omega * (2 * n + abs(p) / k + 1)


def kowalski_printed_energy(n: int, p: int, k: float, omega: float) -> float:
    """The rival closed form omega (2n + sqrt(1 + 4p^2/k^2)/2 + 1)."""
    return omega * (2 * n + 0.5 * math.sqrt(1 + 4 * p * p / (k * k)) + 1)


# ---------------------------------------------------------------------------
# bound states


def auto_r_max(mu: float, omega: float, n_max: int) -> float:
    """Turning point of the highest requested level plus 8 Gaussian widths."""
    e_est = oscillator_energy(n_max, mu, omega)
    return math.sqrt(2 * e_est) / omega + 8.0 / math.sqrt(omega)


def _radial_matrix(mu: float, omega: float, r_max: float, N: int):
    # R = r**mu y with y smooth; -(r^a y')'/r^a + omega^2 r^2 y = 2E y, a = 2 mu + 1,
    # flux form on cell centres, symmetrised by chi = r**(a/2) y = sqrt(r) R
    h = r_max / N
    r = h * (np.arange(1, N + 1) - 0.5)
    a = 2 * mu + 1
    # weight ratios in log form: r**a overflows for large mu
    lr = np.log(r)
    lp = np.log(r + 0.5 * h)
    with np.errstate(divide="ignore"):
        lm = np.log(r - 0.5 * h)
    d = (np.exp(a * (lp - lr)) + np.exp(a * (lm - lr))) / (h * h) + omega * omega * r * r
    e = -np.exp(a * (lp[:-1] - 0.5 * (lr[:-1] + lr[1:]))) / (h * h)
    return r, h, d, e


def solve_bound_states(
    rp: RadialProblem,
    n_max: int,
    r_max: float | None = None,
    N: int = 2000,
) -> list[Eigenpair]:
    """Lowest ``n_max + 1`` bound states of a radial oscillator problem.

    Eigenvalues are computed on grids of N and 2N cells and Richardson
    extrapolated; eigenvectors come from the finer grid.
    """
    if not rp.omega > 0:
        raise ValueError("bound states need omega > 0")
    if N < 100:
        raise ValueError("N must be at least 100")
    if r_max is None:
        r_max = auto_r_max(rp.mu_eff, rp.omega, n_max)
    count = n_max + 1
    _, _, d, e = _radial_matrix(rp.mu_eff, rp.omega, r_max, N)
    lam_coarse = eigvals_bisect(d, e, range(count))
    r, h, d2, e2 = _radial_matrix(rp.mu_eff, rp.omega, r_max, 2 * N)
    lam_fine, vecs = lowest_eigenpairs(d2, e2, count)
    E_coarse, E_fine = lam_coarse / 2, lam_fine / 2
    E_rich = (4 * E_fine - E_coarse) / 3
    out = []
    for n in range(count):
        chi = vecs[:, n] / math.sqrt(4 * math.pi * h)
        peak = np.max(np.abs(chi))
        tail = bool(np.max(np.abs(chi[-3:])) > 1e-8 * peak)
        if tail:
            warnings.warn(f"level {n}: eigenfunction has not decayed at r_max={r_max:g}", TailWarning, stacklevel=2)
        out.append(
            Eigenpair(
                E=float(E_rich[n]),
                chi=chi,
                r=r,
                h=h,
                r_max=r_max,
                n=n,
                E_levels=(float(E_coarse[n]), float(E_fine[n])),
                boundary_warning=tail,
            )
        )
    return out


# ---------------------------------------------------------------------------
# closed forms


def closed_form_eigenfunction(variant: PdeVariant, n: int, p: int) -> jc.ScalarField:
    """exp(-i E t + i p phi) |r|^mu exp(-omega r^2/2) L_n^mu(omega r^2).

    For NOETHER_HO ``mu = |p|/k``; for KOWALSKI_HO the effective index of the
    rival equation is used, which gives the exact bound states of that
    equation.
    """
    if not variant.tag.is_ho:
        raise ValueError("bound states exist only for the oscillator variants")
    if n < 0 or int(p) != p:
        raise ValueError("need n >= 0 and integer p")
    w = variant.omega
    mu = effective_index(variant, p, variant.k)
    E = oscillator_energy(n, mu, w)
    t, r, phi = jc.variables(CHART)
    radial = jc.exp(-0.5 * w * r * r) * laguerre_expr(n, mu, w * r * r)
    if mu != 0:
        radial = abs(r) ** mu * radial
    return jc.ScalarField(jc.exp(-1j * E * t + 1j * p * phi) * radial, CHART)


def bessel_solution(variant: PdeVariant, p: int, epsilon: float) -> jc.ScalarField:
    """J_mu(sqrt(2 eps) |r|) exp(-i(eps t + p phi)) for the free variants."""
    if variant.tag.is_ho:
        raise ValueError("continuum solutions are built for the free variants")
    ModeNumbers(p=p, epsilon=epsilon)
    mu = effective_index(variant, p, variant.k)
    t, r, phi = jc.variables(CHART)
    radial = besselj(mu, math.sqrt(2 * epsilon) * abs(r))
    return jc.ScalarField(jc.exp(-1j * (epsilon * t + p * phi)) * radial, CHART)


def radial_bessel_field(p: int, epsilon: float, k: float) -> jc.ScalarField:
    (r,) = jc.variables("r")
    return jc.ScalarField(besselj(abs(p) / k, math.sqrt(2 * epsilon) * r), ("r",))


def continuum_check(p: int, epsilon: float, params: ModelParams, r_points) -> float:
    """Max |R'' + R'/r + (2 eps - p^2/(k^2 r^2)) R| for R = J_{|p|/k}(sqrt(2 eps) r)."""
    ModeNumbers(p=p, epsilon=epsilon)
    k = params.k
    r = np.atleast_1d(np.asarray(r_points, dtype=float))
    jet = jc.eval_jet(radial_bessel_field(p, epsilon, k), r[None, :], 2)
    R, dR, d2R = jet.value, jet.grad[0], jet.hess[0, 0]
    res = d2R + dR / r + (2 * epsilon - p * p / (k * k * r * r)) * R
    return float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# cone inner product


def _as_callable(f, t: float) -> Callable:
    if isinstance(f, jc.ScalarField):
        def fn(r, phi, _f=f):
            pts = np.stack([np.full_like(r, t), r, phi])
            return jc.evaluate(_f, pts)

        return fn
    return f


def inner_product(
    f,
    g,
    r_max: float,
    quad_order: int = 20,
    n_panels: int = 64,
    n_phi: int = 64,
    t: float = 0.0,
) -> complex:
    """<f, g> = int_0^{2pi} int_{-inf}^{inf} conj(f) g |r| dr dphi.

    ``f`` and ``g`` are closed-form fields over (t, r, phi) evaluated at time
    ``t``, or callables ``(r, phi) -> array``.  The radial integral uses
    composite Gauss-Legendre panels on [-r_max, 0] and [0, r_max]; the angular
    one the trapezoid rule, exact for trigonometric polynomials of degree
    below ``n_phi``.
    """
    fa, ga = _as_callable(f, t), _as_callable(g, t)
    x, w = np.polynomial.legendre.leggauss(quad_order)
    edges = np.linspace(0.0, r_max, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    rq = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wq = (0.5 * (b - a) * w).ravel()
    r = np.concatenate([-rq[::-1], rq])
    wr = np.concatenate([wq[::-1], wq]) * np.abs(r)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    R, P = np.meshgrid(r, phi, indexing="ij")
    vals = np.conj(fa(R.ravel(), P.ravel())) * ga(R.ravel(), P.ravel())
    vals = vals.reshape(R.shape)
    edge = np.concatenate([np.abs(fa(np.full(n_phi, s * r_max), phi)) for s in (-1, 1)])
    edge_g = np.concatenate([np.abs(ga(np.full(n_phi, s * r_max), phi)) for s in (-1, 1)])
    if max(edge.max(), edge_g.max()) > 1e-10:
        warnings.warn(f"integrand has not decayed at r_max={r_max:g}", TailWarning, stacklevel=2)
    return complex(np.sum(wr[:, None] * vals) * (2 * math.pi / n_phi))
