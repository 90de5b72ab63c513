"""Classical motion on the double cone: Lagrangians, equations of motion,
adaptive integration, closed-form solutions and first integrals.

Coordinates are the signed generator distance ``r`` (its sign selects the
nappe) and the angle ``phi``.  With ``k = sin(alpha)`` the map
``u = r cos(k phi)``, ``v = r sin(k phi)`` turns the free particle into a
planar free particle and the radial oscillator into a planar isotropic
oscillator; the first integrals here are pulled back through that map.

Because ``k phi`` is only defined modulo ``2 pi k`` on the cone, integrated
trajectories carry a continuous lift of ``phi``; :meth:`State.wrapped`
gives the chart value in ``[0, 2 pi)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "Model",
    "ModelParams",
    "State",
    "ExactSolutionParams",
    "Trajectory",
    "FirstIntegral",
    "VertexError",
    "IntegrationError",
    "lagrangian",
    "eom",
    "integrate",
    "exact_free",
    "exact_ho",
    "exact_state",
    "to_plane",
    "noether_integrals",
]

TWO_PI = 2.0 * math.pi
VERTEX_GUARD = 1e-8


class VertexError(ValueError):
    """The cone parametrization is singular at the vertex r = 0."""


class IntegrationError(RuntimeError):
    pass


class Model(str, enum.Enum):
    FREE = "free"
    HARMONIC = "harmonic"


@dataclass(frozen=True)
class ModelParams:
    k: float
    omega: float | None = None
    model: Model = Model.FREE

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        # k = 1 is the flat limit (plane in polar coordinates)
        if not 0.0 < self.k <= 1.0:
            raise ValueError(f"k must lie in (0, 1], got {self.k}")
        if self.model is Model.HARMONIC:
            if self.omega is None or not self.omega > 0:
                raise ValueError("the harmonic model needs omega > 0")
        elif self.omega is not None:
            raise ValueError("omega is only meaningful for the harmonic model")

    @classmethod
    def free(cls, k: float) -> "ModelParams":
        return cls(k=k)

    @classmethod
    def harmonic(cls, k: float, omega: float) -> "ModelParams":
        return cls(k=k, omega=omega, model=Model.HARMONIC)

    @property
    def omega2(self) -> float:
        return self.omega**2 if self.model is Model.HARMONIC else 0.0


@dataclass(frozen=True)
class State:
    t: float
    r: float
    phi: float
    rdot: float
    phidot: float

    def wrapped(self) -> "State":
        return State(self.t, self.r, self.phi % TWO_PI, self.rdot, self.phidot)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.phi, self.rdot, self.phidot])


@dataclass(frozen=True)
class ExactSolutionParams:
    c1: float
    c2: float
    c3: float
    c4: float

    def __post_init__(self):
        if self.c1 == self.c2 == 0 and self.c3 == self.c4 == 0:
            raise ValueError("all constants zero gives r = 0 identically")


def _check_r(r):
    if np.any(np.asarray(r) == 0):
        raise VertexError("r = 0 is the cone vertex")


def lagrangian(params: ModelParams, state: State) -> float:
    kinetic = 0.5 * (state.rdot**2 + params.k**2 * state.r**2 * state.phidot**2)
    return kinetic - 0.5 * params.omega2 * state.r**2


def eom(params: ModelParams, state: State) -> tuple[float, float]:
    """(r'', phi'') from the Euler-Lagrange equations."""
    _check_r(state.r)
    k2 = params.k**2
    rddot = k2 * state.r * state.phidot**2 - params.omega2 * state.r
    phiddot = -2.0 * state.rdot * state.phidot / state.r
    return rddot, phiddot


# ---------------------------------------------------------------------------
# linearizing map


def to_plane(k: float, r, phi, rdot=None, phidot=None):
    """(u, v) or (u, v, udot, vdot) for u = r cos(k phi), v = r sin(k phi)."""
    _check_r(r)
    c, s = np.cos(k * phi), np.sin(k * phi)
    u, v = r * c, r * s
    if rdot is None:
        return u, v
    w = k * r * phidot
    return u, v, rdot * c - w * s, rdot * s + w * c


def from_plane(k: float, u, v, udot=None, vdot=None):
    """Inverse of :func:`to_plane` on the positive branch r > 0."""
    r = np.hypot(u, v)
    if np.any(r == 0):
        raise VertexError("(u, v) = (0, 0) is the image of the vertex")
    phi = np.mod(np.arctan2(v, u), TWO_PI) / k
    if udot is None:
        return r, phi
    rdot = (u * udot + v * vdot) / r
    phidot = (u * vdot - v * udot) / (k * r * r)
    return r, phi, rdot, phidot


# ---------------------------------------------------------------------------
# closed-form general solutions


def _plane_free(c: ExactSolutionParams, t):
    v, vdot = c.c1 * t + c.c2, c.c1 + 0.0 * t
    u, udot = c.c3 * t + c.c4, c.c3 + 0.0 * t
    return u, v, udot, vdot


def _plane_ho(c: ExactSolutionParams, omega, t):
    cw, sw = np.cos(omega * t), np.sin(omega * t)
    v = c.c1 * cw + c.c2 * sw
    u = c.c3 * cw + c.c4 * sw
    vdot = omega * (-c.c1 * sw + c.c2 * cw)
    udot = omega * (-c.c3 * sw + c.c4 * cw)
    return u, v, udot, vdot


def exact_free(c: ExactSolutionParams, k: float, t):
    """Positive-branch (r, phi) of the free general solution.

    ``tan(k phi) = (c1 t + c2) / (c3 t + c4)``; the quadrant is fixed by
    atan2 and ``k phi`` is taken in ``[0, 2 pi)``.
    """
    u, v, _, _ = _plane_free(c, t)
    return from_plane(k, u, v)


def exact_ho(c: ExactSolutionParams, k: float, omega: float, t):
    """Positive-branch (r, phi) of the oscillator general solution."""
    u, v, _, _ = _plane_ho(c, omega, t)
    return from_plane(k, u, v)


def exact_state(params: ModelParams, c: ExactSolutionParams, t: float) -> State:
    """Full state (with velocities) of the closed-form solution at time t."""
    if params.model is Model.FREE:
        u, v, ud, vd = _plane_free(c, t)
    else:
        u, v, ud, vd = _plane_ho(c, params.omega, t)
    r, phi, rdot, phidot = from_plane(params.k, u, v, ud, vd)
    return State(float(t), float(r), float(phi), float(rdot), float(phidot))


# ---------------------------------------------------------------------------
# first integrals


class FirstIntegral(NamedTuple):
    """A conserved quantity labelled by the Noether generator it comes from."""

    generator: str
    description: str
    fn: Callable

    def __call__(self, state: State):
        return self.fn(state.t, state.r, state.phi, state.rdot, state.phidot)

    def evaluate(self, t, r, phi, rdot, phidot):
        return self.fn(t, r, phi, rdot, phidot)


def noether_integrals(params: ModelParams) -> list[FirstIntegral]:
    """The eight first integrals of the model, in generator order."""
    k = params.k

    def plane(fn):
        def wrapped(t, r, phi, rdot, phidot):
            u, v, ud, vd = to_plane(k, r, phi, rdot, phidot)
            return fn(t, u, v, ud, vd)

        return wrapped

    def energy(u, v, ud, vd):
        return 0.5 * (ud * ud + vd * vd) + 0.5 * params.omega2 * (u * u + v * v)

    if params.model is Model.FREE:
        return [
            FirstIntegral(
                "Gamma_5",
                "projective: t^2 E - t (u u' + v v') + (u^2 + v^2)/2",
                plane(lambda t, u, v, ud, vd: t * t * energy(u, v, ud, vd) - t * (u * ud + v * vd) + 0.5 * (u * u + v * v)),
            ),
            FirstIntegral(
                "Gamma_6",
                "dilation: t E - (u u' + v v')/2",
                plane(lambda t, u, v, ud, vd: t * energy(u, v, ud, vd) - 0.5 * (u * ud + v * vd)),
            ),
            FirstIntegral("Gamma_7", "energy", plane(lambda t, u, v, ud, vd: energy(u, v, ud, vd))),
            FirstIntegral("Gamma_8", "boost: u - t u'", plane(lambda t, u, v, ud, vd: u - t * ud)),
            FirstIntegral("Gamma_9", "momentum u'", plane(lambda t, u, v, ud, vd: ud)),
            FirstIntegral("Gamma_10", "boost: v - t v'", plane(lambda t, u, v, ud, vd: v - t * vd)),
            FirstIntegral("Gamma_11", "momentum v'", plane(lambda t, u, v, ud, vd: vd)),
            FirstIntegral(
                "Gamma_15",
                "angular momentum k (u v' - v u') = k^2 r^2 phi'",
                plane(lambda t, u, v, ud, vd: k * (u * vd - v * ud)),
            ),
        ]

    w = params.omega

    def dilation_like(T, dT, ddT):
        # T E - T'/2 (x.x') + T''/4 |x|^2 is conserved when T''' + 4 w^2 T' = 0
        def fn(t, u, v, ud, vd):
            return (
                T(t) * energy(u, v, ud, vd)
                - 0.5 * dT(t) * (u * ud + v * vd)
                + 0.25 * ddT(t) * (u * u + v * v)
            )

        return fn

    def translation_like(a, da, pick):
        # a x' - a' x is conserved when a'' + w^2 a = 0
        def fn(t, u, v, ud, vd):
            x, xd = (u, ud) if pick == "u" else (v, vd)
            return a(t) * xd - da(t) * x

        return fn

    cos_, sin_ = np.cos, np.sin
    return [
        FirstIntegral(
            "Xi_8",
            "angular momentum k (u v' - v u') = k^2 r^2 phi'",
            plane(lambda t, u, v, ud, vd: k * (u * vd - v * ud)),
        ),
        FirstIntegral("Xi_9", "energy", plane(lambda t, u, v, ud, vd: energy(u, v, ud, vd))),
        FirstIntegral(
            "Xi_10",
            "T = cos(2wt) dilation-type integral",
            plane(dilation_like(lambda t: cos_(2 * w * t), lambda t: -2 * w * sin_(2 * w * t), lambda t: -4 * w * w * cos_(2 * w * t))),
        ),
        FirstIntegral(
            "Xi_11",
            "T = sin(2wt) dilation-type integral",
            plane(dilation_like(lambda t: sin_(2 * w * t), lambda t: 2 * w * cos_(2 * w * t), lambda t: -4 * w * w * sin_(2 * w * t))),
        ),
        FirstIntegral(
            "Xi_12",
            "cos(wt) u' + w sin(wt) u",
            plane(translation_like(lambda t: cos_(w * t), lambda t: -w * sin_(w * t), "u")),
        ),
        FirstIntegral(
            "Xi_13",
            "sin(wt) u' - w cos(wt) u",
            plane(translation_like(lambda t: sin_(w * t), lambda t: w * cos_(w * t), "u")),
        ),
        FirstIntegral(
            "Xi_14",
            "cos(wt) v' + w sin(wt) v",
            plane(translation_like(lambda t: cos_(w * t), lambda t: -w * sin_(w * t), "v")),
        ),
        FirstIntegral(
            "Xi_15",
            "sin(wt) v' - w cos(wt) v",
            plane(translation_like(lambda t: sin_(w * t), lambda t: w * cos_(w * t), "v")),
        ),
    ]


# ---------------------------------------------------------------------------
# adaptive integration (Dormand-Prince 5(4), PI step control)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW


@dataclass
class Trajectory:
    """Integrated samples; ``phi`` is the continuous lift of the angle."""

    t: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    rdot: np.ndarray
    phidot: np.ndarray
    integrals: dict[str, np.ndarray]
    rtol: float
    atol: float
    event: str | None = None
    n_steps: int = 0
    n_rejected: int = 0
    params: ModelParams | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    def states(self, wrap: bool = True) -> list[State]:
        out = [State(*map(float, row)) for row in zip(self.t, self.r, self.phi, self.rdot, self.phidot)]
        return [s.wrapped() for s in out] if wrap else out

    def drift(self) -> dict[str, float]:
        """Largest relative change of each first integral along the samples.

        The change is measured against ``max(|I(t0)|, scale)`` where ``scale``
        is the size of the integral's building blocks at the start (energy,
        |x||x'| and |x|^2 in the plane), so integrals that happen to start
        near zero are not divided by a vanishing number.
        """
        u, v, ud, vd = to_plane(self.params.k, self.r[0], self.phi[0], self.rdot[0], self.phidot[0])
        scale = max(1.0, float(np.hypot(ud, vd)) * float(np.hypot(u, v)), float(u * u + v * v), float(ud * ud + vd * vd))
        return {
            name: float(np.max(np.abs(vals - vals[0])) / max(abs(vals[0]), scale))
            for name, vals in self.integrals.items()
        }


def _rhs(params: ModelParams):
    k2, w2 = params.k**2, params.omega2

    def f(y):
        r, _, rd, pd = y
        return np.array([rd, pd, k2 * r * pd * pd - w2 * r, -2.0 * rd * pd / r])

    return f


def integrate(
    params: ModelParams,
    initial: State,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    t_eval=None,
    vertex_guard: float = VERTEX_GUARD,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate the equations of motion from ``initial`` to ``t_end``.

    Samples are recorded at every accepted step, or only at ``t_eval`` when
    given (steps are shortened to land on those times exactly).  If |r| falls
    below ``vertex_guard`` or r changes sign, the trajectory stops early with
    ``event == "vertex"``.
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    _check_r(initial.r)
    if t_end <= initial.t:
        raise ValueError("t_end must be after the initial time")
    f = _rhs(params)
    t = float(initial.t)
    y = np.array([initial.r, initial.phi, initial.rdot, initial.phidot], dtype=float)

    if t_eval is not None:
        targets = [float(s) for s in np.asarray(t_eval, dtype=float) if initial.t < s <= t_end]
        record_start = bool(np.any(np.isclose(np.asarray(t_eval, dtype=float), initial.t, rtol=0, atol=1e-15)))
    else:
        targets = None
        record_start = True
    out_t: list[float] = [t] if record_start else []
    out_y: list[np.ndarray] = [y.copy()] if record_start else []

    k1 = f(y)
    scale0 = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale0) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale0) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, t_end - t)

    err_prev = 1e-4
    event = None
    n_steps = n_rejected = 0
    next_target = 0
    while t < t_end:
        if n_steps + n_rejected > max_steps:
            raise IntegrationError("maximum number of steps exceeded")
        stop = t_end if targets is None else targets[next_target]
        landing = t + h >= stop - 1e-14 * max(1.0, abs(stop))
        h_try = stop - t if landing else h
        if h_try < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(f"step size underflow at t = {t}")
        ks = [k1]
        for i in range(1, 7):
            yi = y + h_try * sum(a * kj for a, kj in zip(_A[i], ks))
            ks.append(f(yi))
        y_new = y + h_try * sum(b * kj for b, kj in zip(_B[:6], ks[:6]))
        err_vec = h_try * sum(e * kj for e, kj in zip(_E, ks))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not np.all(np.isfinite(y_new)):
            err = np.inf
        if err <= 1.0:
            if abs(y_new[0]) < vertex_guard or np.sign(y_new[0]) != np.sign(y[0]):
                event = "vertex"
                break
            n_steps += 1
            t = stop if landing else t + h_try
            y = y_new
            k1 = ks[6]
            if targets is None or landing:
                out_t.append(t)
                out_y.append(y.copy())
                if targets is not None:
                    next_target += 1
                    if next_target == len(targets):
                        break
            err = max(err, 1e-10)
            fac = 0.9 * err ** (-0.7 / 5) * err_prev ** (0.4 / 5)
            err_prev = err
            if not landing:
                h = h_try * min(5.0, max(0.2, fac))
        else:
            n_rejected += 1
            fac = 0.9 * err ** (-1 / 5) if np.isfinite(err) else 0.1
            h = h_try * max(0.1, fac)

    ys = np.array(out_y).reshape(-1, 4)
    ts = np.array(out_t)
    integrals = {
        fi.generator: np.asarray(fi.evaluate(ts, ys[:, 0], ys[:, 1], ys[:, 2], ys[:, 3]), dtype=float)
        for fi in noether_integrals(params)
    } if len(ts) else {}
    return Trajectory(
        t=ts,
        r=ys[:, 0],
        phi=ys[:, 1],
        rdot=ys[:, 2],
        phidot=ys[:, 3],
        integrals=integrals,
        rtol=rtol,
        atol=atol,
        event=event,
        n_steps=n_steps,
        n_rejected=n_rejected,
        params=params,
    )
