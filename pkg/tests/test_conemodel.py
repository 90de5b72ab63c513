import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_states
from conequant.conemodel import (
    ExactSolutionParams,
    IntegrationError,
    ModelParams,
    State,
    VertexError,
    eom,
    exact_free,
    exact_ho,
    exact_state,
    from_plane,
    integrate,
    lagrangian,
    noether_integrals,
    to_plane,
)

FREE = ModelParams.free(0.6)
HO = ModelParams.harmonic(0.6, 1.5)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams.free(0.0)
    with pytest.raises(ValueError):
        ModelParams.free(1.5)
    with pytest.raises(ValueError):
        ModelParams.harmonic(0.5, 0.0)
    with pytest.raises(ValueError):
        ModelParams(k=0.5, omega=1.0)
    assert ModelParams.free(1.0).k == 1.0  # flat limit


def test_lagrangian_examples():
    s = State(0.0, 2.0, 0.0, 1.0, 3.0)
    assert lagrangian(ModelParams.free(0.5), s) == pytest.approx(5)
    assert lagrangian(ModelParams.harmonic(0.5, 1.0), s) == pytest.approx(3)
    assert lagrangian(FREE, State(0.0, 1.7, 0.4, 0.0, 0.0)) == 0


def test_eom_examples():
    assert eom(ModelParams.free(0.5), State(0, 1, 0, 0, 2)) == pytest.approx((1, 0))
    assert eom(ModelParams.harmonic(0.5, 2), State(0, 1, 0, 0, 0)) == pytest.approx((-4, 0))
    assert eom(FREE, State(0, 1.3, 0.2, -0.7, 0)) == pytest.approx((0, 0))
    with pytest.raises(VertexError):
        eom(FREE, State(0, 0.0, 0, 1, 1))


def test_exact_free_examples():
    c = ExactSolutionParams(1, 0, 0, 1)
    r, phi = exact_free(c, 0.5, 1.0)
    assert r == pytest.approx(math.sqrt(2))
    assert 0.5 * phi == pytest.approx(math.pi / 4)
    r, phi = exact_free(ExactSolutionParams(0, 1, 1, 0), 0.5, 0.0)
    assert (r, 0.5 * phi) == pytest.approx((1, math.pi / 2))
    r, phi = exact_free(c, 0.5, 0.0)
    assert (r, phi) == pytest.approx((1, 0))
    with pytest.raises(ValueError):
        ExactSolutionParams(0, 0, 0, 0)


def test_exact_ho_examples():
    c = ExactSolutionParams(1, 0, 0, 1)
    r, phi = exact_ho(c, 0.5, 1.0, 0.0)
    assert (r, 0.5 * phi) == pytest.approx((1, math.pi / 2))
    r, phi = exact_ho(c, 0.5, 1.0, math.pi / 2)
    assert r == pytest.approx(1) and 0.5 * phi == pytest.approx(0, abs=1e-15)
    r, phi = exact_ho(ExactSolutionParams(0, 0, 1, 0), 0.5, 3.0, 0.0)
    assert (r, phi) == pytest.approx((1, 0))
    with pytest.raises(VertexError):
        from_plane(0.5, 0.0, 0.0)


@settings(max_examples=100)
@given(st.floats(0.05, 1.0), st.floats(0.1, 5), st.floats(-10, 10), st.floats(-3, 3), st.floats(-3, 3))
def test_plane_round_trip(k, r, phi, rdot, phidot):
    u, v, ud, vd = to_plane(k, r, phi, rdot, phidot)
    r2, phi2, rd2, pd2 = from_plane(k, u, v, ud, vd)
    assert r2 == pytest.approx(r, rel=1e-12)
    # the angle comes back modulo the period 2 pi / k of the map
    assert math.cos(k * (phi2 - phi)) == pytest.approx(1, abs=1e-10)
    assert rd2 == pytest.approx(rdot, abs=1e-10)
    assert pd2 == pytest.approx(phidot, abs=1e-9)


def test_exact_solution_tan_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        c = ExactSolutionParams(*rng.uniform(-2, 2, 4))
        t = rng.uniform(-3, 3)
        k = rng.uniform(0.1, 0.95)
        r, phi = exact_free(c, k, t)
        assert math.tan(k * phi) == pytest.approx((c.c1 * t + c.c2) / (c.c3 * t + c.c4), rel=1e-9)
        assert r * math.cos(k * phi) == pytest.approx(c.c3 * t + c.c4, abs=1e-12)


@pytest.mark.parametrize("params", [FREE, HO], ids=["free", "ho"])
def test_exact_state_solves_eom(params):
    c = ExactSolutionParams(0.7, -0.4, 0.3, 1.1)
    h = 1e-4
    for t in (0.0, 0.8, 2.1):
        s = exact_state(params, c, t)
        sp, sm = exact_state(params, c, t + h), exact_state(params, c, t - h)
        rdd = (sp.r - 2 * s.r + sm.r) / h**2
        # unwrap the angle difference before differencing
        dp = math.remainder(sp.phi - s.phi, 2 * math.pi / params.k)
        dm = math.remainder(s.phi - sm.phi, 2 * math.pi / params.k)
        pdd = (dp - dm) / h**2
        want = eom(params, s)
        assert rdd == pytest.approx(want[0], abs=1e-5)
        assert pdd == pytest.approx(want[1], abs=1e-5)


def test_integrate_matches_exact_free():
    params = ModelParams.free(0.5)
    c = ExactSolutionParams(1, 0, 0, 1)
    s0 = exact_state(params, c, 0.0)
    traj = integrate(params, s0, 5.0)
    end = exact_state(params, c, 5.0)
    assert traj.r[-1] == pytest.approx(end.r, abs=1e-8)
    assert math.cos(params.k * (traj.phi[-1] - end.phi)) == pytest.approx(1, abs=1e-12)


def test_integrate_radial_oscillator():
    params = ModelParams.harmonic(0.7, 2.0)
    r0, v0 = 1.2, 0.5
    # the radial oscillation reaches the vertex at t ~ 0.888
    t = np.linspace(0, 0.85, 11)
    traj = integrate(params, State(0, r0, 0.3, v0, 0.0), 0.85, t_eval=t)
    np.testing.assert_allclose(traj.t, t)
    np.testing.assert_allclose(traj.r, r0 * np.cos(2 * t) + v0 / 2 * np.sin(2 * t), atol=1e-8)
    assert np.all(traj.phi == 0.3)


def test_integrate_equilibrium():
    traj = integrate(FREE, State(0, 1.4, 2.0, 0, 0), 3.0)
    assert np.all(traj.r == 1.4) and np.all(traj.phi == 2.0)


def test_vertex_event_stops_early():
    traj = integrate(FREE, State(0, 1.0, 0.0, -1.0, 0.0), 5.0)
    assert traj.event == "vertex"
    assert traj.t[-1] < 1.0
    assert np.all(traj.r > 0)


def test_integrate_argument_errors():
    with pytest.raises(VertexError):
        integrate(FREE, State(0, 0.0, 0, 1, 1), 1.0)
    with pytest.raises(ValueError):
        integrate(FREE, State(0, 1.0, 0, 1, 1), 1.0, rtol=0)
    with pytest.raises(IntegrationError):
        integrate(FREE, State(0, 1.0, 0, 1, 1), 10.0, max_steps=3)


@pytest.mark.parametrize("params", [FREE, HO], ids=["free", "ho"])
def test_against_exact_random(params):
    rng = np.random.default_rng(11)
    for s0 in random_states(params, rng, 8, t_end=5.0):
        t = np.linspace(0, 5, 6)
        traj = integrate(params, s0, 5.0, t_eval=t)
        u0, v0, ud0, vd0 = to_plane(params.k, s0.r, s0.phi, s0.rdot, s0.phidot)
        u, v = to_plane(params.k, traj.r, traj.phi)
        if params.omega:
            w = params.omega
            ue = u0 * np.cos(w * t) + ud0 / w * np.sin(w * t)
            ve = v0 * np.cos(w * t) + vd0 / w * np.sin(w * t)
        else:
            ue, ve = u0 + ud0 * t, v0 + vd0 * t
        assert np.max(np.abs(u - ue)) <= 1e-7 and np.max(np.abs(v - ve)) <= 1e-7


def test_integral_examples():
    params = ModelParams.free(0.5)
    named = {fi.generator: fi for fi in noether_integrals(params)}
    s = State(0.3, 1.5, 0.4, 0.2, 0.7)
    assert named["Gamma_15"](s) == pytest.approx(0.25 * 1.5**2 * 0.7)
    assert named["Gamma_7"](s) == pytest.approx(0.5 * (0.2**2 + 0.25 * 1.5**2 * 0.7**2))
    c = ExactSolutionParams(1, 0, 0, 1)
    # planar velocity (0, 1): energy 1/2 along the whole solution
    for t in (0.0, 1.0, 4.0):
        assert named["Gamma_7"](exact_state(params, c, t)) == pytest.approx(0.5)
    ho = {fi.generator: fi for fi in noether_integrals(ModelParams.harmonic(0.5, 2.0))}
    assert ho["Xi_9"](s) == pytest.approx(named["Gamma_7"](s) + 0.5 * 4 * 1.5**2)


@pytest.mark.parametrize("params", [FREE, HO], ids=["free", "ho"])
def test_integral_labels(params):
    names = [fi.generator for fi in noether_integrals(params)]
    assert len(names) == 8 and len(set(names)) == 8
    prefix = "Gamma_" if params.omega is None else "Xi_"
    assert all(n.startswith(prefix) for n in names)


@pytest.mark.parametrize("params", [FREE, HO], ids=["free", "ho"])
def test_integrals_conserved(params):
    rng = np.random.default_rng(2)
    for s0 in random_states(params, rng, 5):
        drift = integrate(params, s0, 10.0).drift()
        assert max(drift.values()) <= 1e-8


@pytest.mark.parametrize("params", [FREE, HO], ids=["free", "ho"])
def test_time_translation(params):
    s0 = State(0.0, 1.1, 0.4, 0.3, 0.6)
    t = np.linspace(0, 4, 9)
    a = integrate(params, s0, 4.0, t_eval=t)
    b = integrate(params, State(3.0, 1.1, 0.4, 0.3, 0.6), 7.0, t_eval=t + 3.0)
    if params.omega is None:
        np.testing.assert_allclose(a.r, b.r, atol=1e-8)
        np.testing.assert_allclose(a.phi, b.phi, atol=1e-8)
    else:
        # the oscillator is autonomous too
        np.testing.assert_allclose(a.r, b.r, atol=1e-8)


@pytest.mark.parametrize("params", [FREE, HO], ids=["free", "ho"])
def test_angular_shift(params):
    t = np.linspace(0, 4, 9)
    a = integrate(params, State(0.0, 1.1, 0.4, 0.3, 0.6), 4.0, t_eval=t)
    b = integrate(params, State(0.0, 1.1, 1.9, 0.3, 0.6), 4.0, t_eval=t)
    np.testing.assert_allclose(a.r, b.r, atol=1e-8)
    np.testing.assert_allclose(b.phi - a.phi, 1.5, atol=1e-8)
