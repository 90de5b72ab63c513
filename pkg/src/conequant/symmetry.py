"""Point-symmetry generators on (t, r, phi) and the checks built on them.

A generator ``X = V d_t + V_r d_r + V_phi d_phi (+ g psi d_psi)`` is certified
numerically: for the equations of motion its second prolongation must
annihilate ``(r'' - F_r, phi'' - F_phi)`` on shell; for the Schrodinger
equations its evolutionary action ``Q psi = g psi - V psi_t - V_r psi_r -
V_phi psi_phi`` must map solutions to solutions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import jetcalc as jc
from .conemodel import Model, ModelParams, from_plane, to_plane
from .spectrum import CHART, PdeVariant, pde_lhs

__all__ = [
    "GeneratorSet",
    "VectorField",
    "JetPoint2",
    "DeterminingResidual",
    "StructureConstants",
    "IllConditionedSampling",
    "SubalgebraReport",
    "builtin_generators",
    "generator",
    "corrected_generator",
    "negative_control",
    "MISPRINTS",
    "sample_jets",
    "sample_points",
    "prolong2_ode",
    "determining_residual",
    "components_at",
    "commutator",
    "commutator_at",
    "structure_constants",
    "jacobi_at",
    "killing_nondegenerate",
    "verify_subalgebra_A4511",
    "linearize",
    "inverse_linearize",
    "evolutionary_field",
    "evolutionary_apply",
    "action_residual",
]


class GeneratorSet(str, enum.Enum):
    GAMMA = "Gamma"
    XI = "Xi"
    LAMBDA = "Lambda"
    OMEGA = "Omega"
    UPSILON = "Upsilon"
    PI = "Pi"


@dataclass(frozen=True)
class VectorField:
    name: str
    xi: jc.ScalarField
    etas: tuple[jc.ScalarField, ...]
    psi_coeff: jc.ScalarField | None = None

    @property
    def coefficients(self) -> tuple[jc.ScalarField, ...]:
        return (self.xi,) + tuple(self.etas)

    def scaled(self, c, name: str | None = None) -> "VectorField":
        psi = None if self.psi_coeff is None else self.psi_coeff * c
        return VectorField(name or f"{c}*{self.name}", self.xi * c, tuple(e * c for e in self.etas), psi)

    def __add__(self, other: "VectorField") -> "VectorField":
        if self.psi_coeff is None and other.psi_coeff is None:
            psi = None
        else:
            psi = _field(0) if self.psi_coeff is None else self.psi_coeff
            psi = psi + (other.psi_coeff if other.psi_coeff is not None else 0)
        return VectorField(
            f"{self.name}+{other.name}",
            self.xi + other.xi,
            tuple(a + b for a, b in zip(self.etas, other.etas)),
            psi,
        )

    def with_psi(self, name: str, g) -> "VectorField":
        return VectorField(name, self.xi, self.etas, _field(g))


def _field(expr) -> jc.ScalarField:
    return jc.ScalarField(expr, CHART)


def _vf(name, xi=0, er=0, ephi=0, g=None) -> VectorField:
    return VectorField(name, _field(xi), (_field(er), _field(ephi)), None if g is None else _field(g))


# ---------------------------------------------------------------------------
# generator tables


def _gamma(k: float) -> list[VectorField]:
    t, r, phi = jc.variables(CHART)
    c, s = jc.cos(k * phi), jc.sin(k * phi)
    c2, s2 = jc.cos(2 * k * phi), jc.sin(2 * k * phi)
    return [
        _vf("Gamma_1", xi=c * r * t, er=c * r * r),
        _vf("Gamma_2", xi=c * r),
        _vf("Gamma_3", xi=s * r * t, er=s * r * r),
        _vf("Gamma_4", xi=s * r),
        _vf("Gamma_5", xi=t * t, er=t * r),
        _vf("Gamma_6", xi=t, er=0.5 * r),
        _vf("Gamma_7", xi=1),
        _vf("Gamma_8", er=t * c, ephi=-t * s / (k * r)),
        _vf("Gamma_9", er=c, ephi=-s / (k * r)),
        _vf("Gamma_10", er=t * s, ephi=t * c / (k * r)),
        _vf("Gamma_11", er=s, ephi=c / (k * r)),
        _vf("Gamma_12", er=r),
        _vf("Gamma_13", er=k * r * c2, ephi=-s2),
        _vf("Gamma_14", er=k * r * s2, ephi=c2),
        _vf("Gamma_15", ephi=1),
    ]


def _xi(k: float, w: float) -> list[VectorField]:
    t, r, phi = jc.variables(CHART)
    c, s = jc.cos(k * phi), jc.sin(k * phi)
    c2, s2 = jc.cos(2 * k * phi), jc.sin(2 * k * phi)
    cw, sw = jc.cos(w * t), jc.sin(w * t)
    c2w, s2w = jc.cos(2 * w * t), jc.sin(2 * w * t)
    return [
        _vf("Xi_1", xi=c * r * cw, er=-w * c * r * r * sw),
        _vf("Xi_2", xi=c * r * sw, er=w * c * r * r * cw),
        _vf("Xi_3", xi=s * r * cw, er=-w * s * r * r * sw),
        _vf("Xi_4", xi=s * r * sw, er=w * s * r * r * cw),
        _vf("Xi_5", er=c2 * r, ephi=-s2 / k),
        _vf("Xi_6", er=s2 * r, ephi=c2 / k),
        _vf("Xi_7", er=r),
        _vf("Xi_8", ephi=1),
        _vf("Xi_9", xi=1),
        _vf("Xi_10", xi=c2w, er=-w * s2w * r),
        _vf("Xi_11", xi=s2w, er=w * c2w * r),
        _vf("Xi_12", er=cw * c, ephi=-cw * s / (k * r)),
        _vf("Xi_13", er=sw * c, ephi=-sw * s / (k * r)),
        _vf("Xi_14", er=cw * s, ephi=cw * c / (k * r)),
        _vf("Xi_15", er=sw * s, ephi=sw * c / (k * r)),
    ]


def _homogeneity(name: str) -> VectorField:
    return _vf(name, g=1)


def _lambda(k: float) -> list[VectorField]:
    t, r, phi = jc.variables(CHART)
    G = _gamma(k)
    c, s = jc.cos(k * phi), jc.sin(k * phi)
    return [
        _rename(G[14], "Lambda_1"),
        G[7].with_psi("Lambda_2", 1j * k * k * r * c),
        _rename(G[8], "Lambda_3"),
        G[9].with_psi("Lambda_4", 1j * k * k * r * s),
        _rename(G[10], "Lambda_5"),
        G[4].with_psi("Lambda_6", 0.5 * (1j * r * r - 2 * t)),
        _rename(G[5], "Lambda_7"),
        _rename(G[6], "Lambda_8"),
        _homogeneity("Lambda_9"),
    ]


def _omega_coeffs(k: float, w: float):
    t, r, phi = jc.variables(CHART)
    c, s = jc.cos(k * phi), jc.sin(k * phi)
    cw, sw = jc.cos(w * t), jc.sin(w * t)
    c2w, s2w = jc.cos(2 * w * t), jc.sin(2 * w * t)
    return {
        10: w * (s2w - 2j * c2w * w * r * r),
        11: -w * (c2w + 2j * s2w * w * r * r),
        14: -1j * w * r * sw * s,
        15: 1j * w * r * cw * c,
        12: -1j * w * r * sw * c,
        13: 1j * w * r * cw * c,
    }


def _omega(k: float, w: float) -> list[VectorField]:
    X = _xi(k, w)
    g = _omega_coeffs(k, w)
    return [
        _rename(X[7], "Omega_1"),
        X[9].with_psi("Omega_2", g[10]),
        X[10].with_psi("Omega_3", g[11]),
        _rename(X[8], "Omega_4"),
        X[13].with_psi("Omega_5", g[14]),
        X[14].with_psi("Omega_6", g[15]),
        X[11].with_psi("Omega_7", g[12]),
        X[12].with_psi("Omega_8", g[13]),
        _homogeneity("Omega_9"),
    ]


def _upsilon(k: float) -> list[VectorField]:
    L = _lambda(k)
    return [
        _rename(L[0], "Upsilon_1"),
        _rename(L[5], "Upsilon_2"),
        _rename(L[6], "Upsilon_3"),
        _rename(L[7], "Upsilon_4"),
        _homogeneity("Upsilon_5"),
    ]


def _pi(k: float, w: float) -> list[VectorField]:
    X = _xi(k, w)
    g = _omega_coeffs(k, w)
    return [
        _rename(X[7], "Pi_1"),
        X[10].with_psi("Pi_2", g[11]),
        X[9].with_psi("Pi_3", g[10]),
        _rename(X[8], "Pi_4"),
        _homogeneity("Pi_5"),
    ]


def _rename(X: VectorField, name: str) -> VectorField:
    return VectorField(name, X.xi, X.etas, X.psi_coeff)


def builtin_generators(which, k: float, omega: float | None = None) -> list[VectorField]:
    """The printed generators of one family, in their printed order.

    ``which`` is a :class:`GeneratorSet` (or its name: "Gamma", "Xi", ...).
    Xi, Omega and Pi need ``omega``.
    """
    which = _as_set(which)
    if which in (GeneratorSet.XI, GeneratorSet.OMEGA, GeneratorSet.PI) and omega is None:
        raise ValueError(f"{which.value} generators need omega")
    if which is GeneratorSet.GAMMA:
        return _gamma(k)
    if which is GeneratorSet.XI:
        return _xi(k, omega)
    if which is GeneratorSet.LAMBDA:
        return _lambda(k)
    if which is GeneratorSet.OMEGA:
        return _omega(k, omega)
    if which is GeneratorSet.UPSILON:
        return _upsilon(k)
    return _pi(k, omega)


def _as_set(which) -> GeneratorSet:
    if isinstance(which, GeneratorSet):
        return which
    try:
        return GeneratorSet(which)
    except ValueError:
        return GeneratorSet[str(which).upper()]


def generator(name: str, k: float, omega: float | None = None) -> VectorField:
    """Look up a printed generator by name, e.g. ``"Gamma_9"``; ``"Gamma_16"``
    is the combination Gamma_6 + Gamma_12 / 2."""
    family, _, idx = name.partition("_")
    if name == "Gamma_16":
        G = _gamma(k)
        return _rename(G[5] + G[11].scaled(0.5), "Gamma_16")
    gens = builtin_generators(family, k, omega)
    return gens[int(idx) - 1]


# psi coefficients whose printed form fails the symmetry test.  Boost-type
# entries use g = i a'(t) x for a(t) d_x (x = u or v); dilation-type entries
# use g = (i/4) T'' r^2 - T'/2 for T d_t + (T'/2) r d_r, the form that
# reproduces Lambda_6 at T = t^2.  Maps name -> builder (k, omega) -> expr.
def _boost_u(k, w):
    t, r, phi = jc.variables(CHART)
    return 1j * r * jc.cos(k * phi)


def _boost_v(k, w):
    t, r, phi = jc.variables(CHART)
    return 1j * r * jc.sin(k * phi)


def _omega6_fixed(k, w):
    t, r, phi = jc.variables(CHART)
    return 1j * w * r * jc.cos(w * t) * jc.sin(k * phi)


def _dilation_fixed(trig):
    # g = (i/4) T'' r^2 - T'/2 for the generator T d_t + T'/2 r d_r
    def build(k, w):
        t, r, phi = jc.variables(CHART)
        c2w, s2w = jc.cos(2 * w * t), jc.sin(2 * w * t)
        if trig == "cos":
            return w * (s2w - 1j * c2w * w * r * r)
        return -w * (c2w + 1j * s2w * w * r * r)

    return build


MISPRINTS = {
    "Lambda_2": _boost_u,
    "Lambda_4": _boost_v,
    "Omega_2": _dilation_fixed("cos"),
    "Omega_3": _dilation_fixed("sin"),
    "Omega_6": _omega6_fixed,
    "Pi_2": _dilation_fixed("sin"),
    "Pi_3": _dilation_fixed("cos"),
}


def corrected_generator(name: str, k: float, omega: float | None = None) -> VectorField:
    """Pattern-corrected version of a generator listed in :data:`MISPRINTS`."""
    base = generator(name, k, omega)
    if name not in MISPRINTS:
        return base
    return base.with_psi(f"{name}*", MISPRINTS[name](k, omega))


def negative_control(params: ModelParams) -> VectorField:
    """A near miss that must fail: Gamma_9 (Xi_12 for the oscillator) with
    cos(k phi) replaced by cos(2 k phi) in the d_r coefficient."""
    t, r, phi = jc.variables(CHART)
    k = params.k
    c2, s = jc.cos(2 * k * phi), jc.sin(k * phi)
    if params.model is Model.HARMONIC:
        cw = jc.cos(params.omega * t)
        return _vf("Xi_12~", er=cw * c2, ephi=-cw * s / (k * r))
    return _vf("Gamma_9~", er=c2, ephi=-s / (k * r))


# ---------------------------------------------------------------------------
# sampling


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_points(rng, n: int, t_range=(-2.0, 2.0), r_range=(0.3, 3.0)) -> np.ndarray:
    """Points (t, r, phi) with t uniform, |r| uniform in r_range with a random
    sign, phi uniform in [0, 2 pi).  Shape (3, n)."""
    rng = _rng(rng)
    t = rng.uniform(*t_range, n)
    r = rng.uniform(*r_range, n) * rng.choice([-1.0, 1.0], n)
    phi = rng.uniform(0, 2 * np.pi, n)
    return np.stack([t, r, phi])


@dataclass(frozen=True)
class JetPoint2:
    """Second-order jet of a curve (r(t), phi(t)); arrays may be vectorised."""

    t: np.ndarray
    x: np.ndarray  # (2, ...) r, phi
    xd: np.ndarray  # (2, ...) r', phi'
    xdd: np.ndarray  # (2, ...) r'', phi''

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.t)[None], self.x])

    @property
    def size(self) -> int:
        return int(np.size(self.t))


def sample_jets(rng, n: int, vel_range=(-2.0, 2.0)) -> JetPoint2:
    rng = _rng(rng)
    p = sample_points(rng, n)
    xd = rng.uniform(*vel_range, (2, n))
    xdd = rng.uniform(*vel_range, (2, n))
    return JetPoint2(p[0], p[1:], xd, xdd)


# ---------------------------------------------------------------------------
# prolongation and determining equations


def _total_derivatives(jet: jc.Jet, w: np.ndarray, xdd: np.ndarray):
    # w = (1, r', phi'): D_t f = grad . w ; D_t^2 f = w^T H w + f_x . x''
    d1 = np.einsum("i...,i...->...", jet.grad, w)
    d2 = np.einsum("i...,ij...,j...->...", w, jet.hess, w) + np.einsum("i...,i...->...", jet.grad[1:], xdd)
    return d1, d2


def _prolong(X: VectorField, jp: JetPoint2):
    pts = jp.point
    w = np.concatenate([np.ones_like(np.asarray(jp.t, dtype=float))[None], jp.xd])
    jets = [jc.eval_jet(c, pts, 2) for c in X.coefficients]
    D = [_total_derivatives(j, w, jp.xdd) for j in jets]
    DV, DDV = D[0]
    eta1 = np.stack([D[k + 1][0] - jp.xd[k] * DV for k in range(2)])
    eta2 = np.stack([D[k + 1][1] - jp.xd[k] * DDV - 2 * jp.xdd[k] * DV for k in range(2)])
    coeffs = np.stack([j.value for j in jets])
    return coeffs, eta1, eta2


def prolong2_ode(X: VectorField, jp: JetPoint2):
    """First and second prolonged coefficients (eta1, eta2), each shape (2, ...)."""
    _, eta1, eta2 = _prolong(X, jp)
    return eta1, eta2


_EOM_NAMES = ("t", "r", "phi", "rdot", "phidot")


def _eom_fields(params: ModelParams):
    t, r, phi, rd, pd = jc.variables(_EOM_NAMES)
    Fr = params.k**2 * r * pd * pd
    if params.model is Model.HARMONIC:
        Fr = Fr - params.omega**2 * r
    Fphi = -2 * rd * pd / r
    return jc.ScalarField(Fr, _EOM_NAMES), jc.ScalarField(Fphi, _EOM_NAMES)


def on_shell(params: ModelParams, jp: JetPoint2) -> JetPoint2:
    """Copy of ``jp`` with the second derivatives replaced by the EOM values."""
    if np.any(np.asarray(jp.x[0]) == 0):
        raise jc.EvaluationError("the equations of motion are singular at r = 0")
    Fr, Fphi = _eom_fields(params)
    z = np.concatenate([np.asarray(jp.t, dtype=float)[None], jp.x, jp.xd])
    xdd = np.stack([jc.evaluate(Fr, z), jc.evaluate(Fphi, z)])
    return JetPoint2(jp.t, jp.x, jp.xd, xdd)


@dataclass(frozen=True)
class DeterminingResidual:
    raw: np.ndarray  # (2, ...)
    scale: np.ndarray  # 1 + max |prolonged coefficient|

    @property
    def normalized(self) -> np.ndarray:
        return np.abs(self.raw) / self.scale

    @property
    def max_normalized(self) -> float:
        return float(np.max(self.normalized))


def determining_residual(X: VectorField, params: ModelParams, jp: JetPoint2) -> DeterminingResidual:
    """X^(2) applied to (r'' - F_r, phi'' - F_phi), evaluated on shell.

    The second derivatives in ``jp`` are overwritten with the equations of
    motion before evaluation.
    """
    jp = on_shell(params, jp)
    coeffs, eta1, eta2 = _prolong(X, jp)
    Fr, Fphi = _eom_fields(params)
    z = np.concatenate([np.asarray(jp.t, dtype=float)[None], jp.x, jp.xd])
    # generator components on (t, r, phi, r', phi')
    comps = np.concatenate([coeffs, eta1])
    raw = []
    for k, F in enumerate((Fr, Fphi)):
        gF = jc.eval_jet(F, z, 1).grad
        raw.append(eta2[k] - np.einsum("i...,i...->...", comps, gF))
    raw = np.stack(raw)
    scale = 1.0 + np.max(np.abs(np.concatenate([coeffs, eta1, eta2])), axis=0)
    return DeterminingResidual(raw, scale)


# ---------------------------------------------------------------------------
# brackets


def _all_coeffs(X: VectorField) -> list[jc.ScalarField]:
    return list(X.coefficients) + [X.psi_coeff if X.psi_coeff is not None else _field(0)]


def components_at(X: VectorField, points, with_psi: bool = False) -> np.ndarray:
    """Coefficient values (V, V_r, V_phi[, g]) at points; shape (3 or 4, ...)."""
    coeffs = _all_coeffs(X) if with_psi else list(X.coefficients)
    return np.stack([jc.evaluate(c, points) for c in coeffs])


def _apply(X: VectorField, f: jc.ScalarField) -> jc.ScalarField:
    out = jc.ScalarField(0, CHART)
    for i, c in enumerate(X.coefficients):
        out = out + c * f.diff(i)
    return out


def commutator(X: VectorField, Y: VectorField) -> VectorField:
    """Symbolic Lie bracket [X, Y] (components X(Y^i) - Y(X^i))."""
    cx, cy = _all_coeffs(X), _all_coeffs(Y)
    comps = [_apply(X, b) - _apply(Y, a) for a, b in zip(cx, cy)]
    has_psi = X.psi_coeff is not None or Y.psi_coeff is not None
    return VectorField(f"[{X.name},{Y.name}]", comps[0], tuple(comps[1:3]), comps[3] if has_psi else None)


def commutator_at(X: VectorField, Y: VectorField, points) -> np.ndarray:
    """Pointwise bracket coefficients (V, V_r, V_phi, g) of [X, Y]."""
    points = np.asarray(points, dtype=float)
    jx = [jc.eval_jet(c, points, 1) for c in _all_coeffs(X)]
    jy = [jc.eval_jet(c, points, 1) for c in _all_coeffs(Y)]
    vx = np.stack([j.value for j in jx[:3]])
    vy = np.stack([j.value for j in jy[:3]])
    out = [
        np.einsum("i...,i...->...", vx, b.grad) - np.einsum("i...,i...->...", vy, a.grad)
        for a, b in zip(jx, jy)
    ]
    return np.stack(out)


def jacobi_at(X: VectorField, Y: VectorField, Z: VectorField, points) -> float:
    """Max |[[X,Y],Z] + [[Y,Z],X] + [[Z,X],Y]| at the points."""
    total = (
        commutator_at(commutator(X, Y), Z, points)
        + commutator_at(commutator(Y, Z), X, points)
        + commutator_at(commutator(Z, X), Y, points)
    )
    return float(np.max(np.abs(total)))


class IllConditionedSampling(ValueError):
    pass


@dataclass
class StructureConstants:
    """``c[i, j, m]`` is the coefficient of basis[m] in [basis[i], basis[j]]."""

    c: np.ndarray
    fit_residual: float
    names: tuple[str, ...]
    condition: float = 0.0

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.c + np.swapaxes(self.c, 0, 1))))

    def jacobi_residual(self) -> float:
        c = self.c
        # sum_m c[i,j,m] c[m,l,n] + cyclic(i, j, l)
        a = np.einsum("ijm,mln->ijln", c, c)
        total = a + np.transpose(a, (1, 2, 0, 3)) + np.transpose(a, (2, 0, 1, 3))
        return float(np.max(np.abs(total)))


def structure_constants(basis: Sequence[VectorField], points, max_condition: float = 1e10) -> StructureConstants:
    """Least-squares fit of the pointwise brackets against the basis.

    ``fit_residual`` is the worst ``|fit - bracket|_inf / (1 + |bracket|_inf)``
    over all pairs.
    """
    points = np.asarray(points, dtype=float)
    n = len(basis)
    if points.shape[1] < 2 * n:
        raise IllConditionedSampling(f"need at least {2 * n} points, got {points.shape[1]}")
    with_psi = any(X.psi_coeff is not None for X in basis)
    rows = 4 if with_psi else 3
    B = np.stack([components_at(X, points, with_psi).reshape(-1) for X in basis], axis=1)
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedSampling(f"fit system condition number {cond:.3g} exceeds {max_condition:g}")
    dtype = complex if np.iscomplexobj(B) or with_psi else float
    c = np.zeros((n, n, n), dtype=dtype)
    worst = 0.0
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rhs = np.stack([commutator_at(basis[i], basis[j], points)[:rows].reshape(-1) for i, j in pairs], axis=1)
    sol, *_ = np.linalg.lstsq(B, rhs, rcond=None)
    fit = B @ sol
    for col, (i, j) in enumerate(pairs):
        b = rhs[:, col]
        worst = max(worst, float(np.max(np.abs(fit[:, col] - b)) / (1.0 + np.max(np.abs(b)))))
        c[i, j] = sol[:, col]
        c[j, i] = -sol[:, col]
    if dtype is complex and np.max(np.abs(c.imag)) < 1e-12:
        c = c.real
    return StructureConstants(c, worst, tuple(X.name for X in basis), cond)


def _equilibrate(K: np.ndarray, sweeps: int = 100) -> np.ndarray:
    # symmetric diagonal scaling D K D with unit-norm rows, i.e. a rescaled basis
    d = np.ones(K.shape[0])
    for _ in range(sweeps):
        rows = np.linalg.norm(d[:, None] * K * d[None, :], axis=1)
        if np.any(rows == 0):
            break
        d /= np.sqrt(rows)
        if np.max(np.abs(rows - 1)) < 1e-13:
            break
    return d[:, None] * K * d[None, :]


def killing_nondegenerate(sc: StructureConstants):
    """Killing matrix K[i, j] = sum c[i,m,n] c[j,n,m] and a normalised |det|.

    The basis is first rescaled so every row of K has unit Euclidean norm;
    by Hadamard's inequality the determinant then lies in [0, 1], with 0
    exactly when the form is degenerate.  Returns ``(K, |det|)``.
    """
    K = np.real_if_close(np.einsum("imn,jnm->ij", sc.c, sc.c))
    if np.any(np.linalg.norm(K, axis=1) == 0):
        return K, 0.0
    return K, float(abs(np.linalg.det(_equilibrate(K))))


@dataclass
class SubalgebraReport:
    relations: dict[str, float] = field(default_factory=dict)
    tolerance: float = 1e-9

    @property
    def max_residual(self) -> float:
        return max(self.relations.values()) if self.relations else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def verify_subalgebra_A4511(params: ModelParams, rng=0, n_points: int = 20, tolerance: float = 1e-9) -> SubalgebraReport:
    """[X_i, X_j] = 0 and [X_i, X_4] = X_i for (Gamma_7, Gamma_9, Gamma_11, Gamma_16)."""
    k = params.k
    X = [generator(n, k) for n in ("Gamma_7", "Gamma_9", "Gamma_11", "Gamma_16")]
    pts = sample_points(rng, n_points)
    rep = SubalgebraReport(tolerance=tolerance)
    for i in range(3):
        for j in range(i + 1, 3):
            rep.relations[f"[{X[i].name},{X[j].name}] = 0"] = float(np.max(np.abs(commutator_at(X[i], X[j], pts))))
        diff = commutator_at(X[i], X[3], pts)[:3] - components_at(X[i], pts)
        rep.relations[f"[{X[i].name},{X[3].name}] = {X[i].name}"] = float(np.max(np.abs(diff)))
    return rep


# ---------------------------------------------------------------------------
# linearizing map


def linearize(params: ModelParams, state_or_point):
    """Forward map u = r cos(k phi), v = r sin(k phi).

    Accepts a :class:`~conequant.conemodel.State` (returns u, v, u', v') or a
    pair/array (r, phi) (returns u, v).
    """
    k = params.k if isinstance(params, ModelParams) else float(params)
    s = state_or_point
    if hasattr(s, "rdot"):
        return to_plane(k, s.r, s.phi, s.rdot, s.phidot)
    r, phi = s
    return to_plane(k, np.asarray(r, dtype=float), np.asarray(phi, dtype=float))


def inverse_linearize(params, u, v):
    """(r, phi) with r > 0 and phi = (atan2(v, u) mod 2 pi) / k."""
    k = params.k if isinstance(params, ModelParams) else float(params)
    return from_plane(k, u, v)


# ---------------------------------------------------------------------------
# action on wave functions


def evolutionary_field(X: VectorField, psi: jc.ScalarField) -> jc.ScalarField:
    """Q psi = g psi - V psi_t - V_r psi_r - V_phi psi_phi as a closed form."""
    out = psi * X.psi_coeff if X.psi_coeff is not None else jc.ScalarField(0, CHART)
    for i, c in enumerate(X.coefficients):
        out = out - c * psi.diff(i)
    return out


def evolutionary_apply(X: VectorField, psi: jc.ScalarField, points) -> jc.Jet:
    return jc.eval_jet(evolutionary_field(X, psi), points, 2)


def action_residual(X: VectorField, variant: PdeVariant, psi: jc.ScalarField, points) -> float:
    """Max |equation residual of Q psi| over the points."""
    points = np.asarray(points, dtype=float)
    return float(np.max(np.abs(pde_lhs(variant, evolutionary_apply(X, psi, points), points))))
