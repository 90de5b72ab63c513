import itertools
import math

import numpy as np
import pytest

from conequant import jetcalc as jc
from conequant.conemodel import ModelParams, State, integrate
from conequant.spectrum import PdeVariant, bessel_solution, closed_form_eigenfunction
from conequant.symmetry import (
    IllConditionedSampling,
    JetPoint2,
    action_residual,
    builtin_generators,
    commutator,
    commutator_at,
    components_at,
    corrected_generator,
    determining_residual,
    evolutionary_apply,
    generator,
    inverse_linearize,
    jacobi_at,
    killing_nondegenerate,
    linearize,
    negative_control,
    prolong2_ode,
    sample_jets,
    sample_points,
    structure_constants,
    verify_subalgebra_A4511,
    _vf,
)

K, W = 0.6, 1.5
FREE = ModelParams.free(K)
HO = ModelParams.harmonic(K, W)


def test_printed_tables():
    g7 = generator("Gamma_7", K)
    p = np.array([0.3, 1.2, 0.4])
    np.testing.assert_array_equal(components_at(g7, p), [1, 0, 0])
    np.testing.assert_array_equal(components_at(generator("Xi_8", K, W), p), [0, 0, 1])
    lam9 = generator("Lambda_9", K)
    np.testing.assert_array_equal(components_at(lam9, p, with_psi=True), [0, 0, 0, 1])
    sizes = {"Gamma": 15, "Xi": 15, "Lambda": 9, "Omega": 9, "Upsilon": 5, "Pi": 5}
    for name, n in sizes.items():
        gens = builtin_generators(name, K, W)
        assert len(gens) == n
        assert [g.name for g in gens] == [f"{name}_{i}" for i in range(1, n + 1)]
    with pytest.raises(ValueError):
        builtin_generators("Xi", K)


def test_prolongation_examples():
    jp = sample_jets(0, 20)
    eta1, eta2 = prolong2_ode(generator("Gamma_7", K), jp)
    assert np.all(eta1 == 0) and np.all(eta2 == 0)
    eta1, eta2 = prolong2_ode(generator("Gamma_12", K), jp)
    np.testing.assert_allclose(eta1[0], jp.xd[0], rtol=1e-15)
    np.testing.assert_allclose(eta2[0], jp.xdd[0], rtol=1e-15)


def _flow(X, p, eps, steps=40):
    h = eps / steps
    p = np.array(p, dtype=float)
    for _ in range(steps):
        k1 = components_at(X, p)
        k2 = components_at(X, p + 0.5 * h * k1)
        k3 = components_at(X, p + 0.5 * h * k2)
        k4 = components_at(X, p + h * k3)
        p = p + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def _transformed_derivatives(X, t0, x0, xd, xdd, eps):
    # push the quadratic curve through the flow and differentiate it again
    s = np.linspace(-0.02, 0.02, 11)
    pts = np.array([_flow(X, [t0 + si, *(x0 + xd * si + 0.5 * xdd * si * si)], eps) for si in s])
    centre = _flow(X, [t0, *x0], eps)
    out1, out2 = [], []
    for k in (1, 2):
        c = np.polynomial.polynomial.polyfit(pts[:, 0] - centre[0], pts[:, k], 6)
        out1.append(c[1])
        out2.append(2 * c[2])
    return np.array(out1), np.array(out2)


@pytest.mark.parametrize("name", ["Gamma_6", "Gamma_1", "Gamma_13", "Xi_10"])
def test_prolongation_matches_group_flow(name):
    X = generator(name, K, W)
    rng = np.random.default_rng(4)
    for _ in range(3):
        t0 = rng.uniform(-1, 1)
        x0 = np.array([rng.uniform(0.8, 2), rng.uniform(0, 6)])
        xd, xdd = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        eps = 1e-4
        p1, p2 = _transformed_derivatives(X, t0, x0, xd, xdd, eps)
        m1, m2 = _transformed_derivatives(X, t0, x0, xd, xdd, -eps)
        jp = JetPoint2(np.array(t0), x0, xd, xdd)
        eta1, eta2 = prolong2_ode(X, jp)
        np.testing.assert_allclose((p1 - m1) / (2 * eps), eta1, atol=1e-6)
        np.testing.assert_allclose((p2 - m2) / (2 * eps), eta2, atol=1e-6)


def test_prolongation_is_linear():
    jp = sample_jets(1, 50)
    X, Y = generator("Gamma_3", K), generator("Gamma_14", K)
    a, b = 0.7, -2.3
    combo = X.scaled(a) + Y.scaled(b)
    e1, e2 = prolong2_ode(combo, jp)
    x1, x2 = prolong2_ode(X, jp)
    y1, y2 = prolong2_ode(Y, jp)
    np.testing.assert_allclose(e1, a * x1 + b * y1, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(e2, a * x2 + b * y2, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("k", [0.3, 0.6, 0.9])
def test_all_gamma_are_symmetries(k):
    params = ModelParams.free(k)
    jp = sample_jets(np.random.default_rng(7), 120)
    for X in builtin_generators("Gamma", k):
        assert determining_residual(X, params, jp).max_normalized <= 1e-8, X.name


@pytest.mark.parametrize("k,w", [(0.3, 0.5), (0.6, 1.0), (0.9, 2.0)])
def test_all_xi_are_symmetries(k, w):
    params = ModelParams.harmonic(k, w)
    jp = sample_jets(np.random.default_rng(8), 120)
    for X in builtin_generators("Xi", k, w):
        assert determining_residual(X, params, jp).max_normalized <= 1e-8, X.name


def test_determining_examples_and_negative_control():
    jp = sample_jets(np.random.default_rng(9), 100)
    assert determining_residual(generator("Gamma_9", K), FREE, jp).max_normalized <= 1e-9
    assert determining_residual(generator("Xi_10", K, W), HO, jp).max_normalized <= 1e-9
    assert determining_residual(negative_control(FREE), FREE, jp).max_normalized >= 1e-2
    assert determining_residual(negative_control(HO), HO, jp).max_normalized >= 1e-2
    # free generators are not oscillator symmetries and vice versa
    assert determining_residual(generator("Gamma_5", K), HO, jp).max_normalized >= 1e-2
    assert determining_residual(generator("Xi_10", K, W), FREE, jp).max_normalized >= 1e-2


def test_determining_rejects_vertex():
    jp = JetPoint2(np.array([0.0]), np.array([[0.0], [1.0]]), np.ones((2, 1)), np.ones((2, 1)))
    with pytest.raises(jc.EvaluationError):
        determining_residual(generator("Gamma_9", K), FREE, jp)


def test_commutator_examples():
    pts = sample_points(2, 15)
    g = {n: generator(f"Gamma_{n}", K) for n in (5, 6, 7, 9, 11, 15)}
    np.testing.assert_allclose(commutator_at(g[7], g[5], pts)[:3], 2 * components_at(g[6], pts), atol=1e-14)
    np.testing.assert_allclose(commutator_at(g[15], g[9], pts)[:3], -K * components_at(g[11], pts), atol=1e-14)
    assert np.all(commutator_at(g[9], g[9], pts) == 0)


def test_symbolic_and_pointwise_brackets_agree():
    pts = sample_points(3, 10)
    X, Y = generator("Xi_1", K, W), generator("Xi_12", K, W)
    np.testing.assert_allclose(components_at(commutator(X, Y), pts, True), commutator_at(X, Y, pts), atol=1e-13)


@pytest.mark.parametrize("family", ["Gamma", "Xi"])
def test_jacobi_and_antisymmetry_pointwise(family):
    basis = builtin_generators(family, K, W)
    rng = np.random.default_rng(12)
    pts = sample_points(rng, 8)
    triples = list(itertools.combinations(range(15), 3))
    for i in rng.choice(len(triples), 25, replace=False):
        a, b, c = (basis[j] for j in triples[i])
        assert jacobi_at(a, b, c, pts) <= 1e-9
        np.testing.assert_allclose(commutator_at(a, b, pts), -commutator_at(b, a, pts), atol=1e-12)


@pytest.mark.parametrize("family", ["Gamma", "Xi"])
def test_structure_constants_close(family):
    basis = builtin_generators(family, K, W)
    sc = structure_constants(basis, sample_points(5, 60))
    assert sc.fit_residual <= 1e-8
    assert sc.antisymmetry_residual() <= 1e-10
    assert sc.jacobi_residual() <= 1e-8
    K_, det = killing_nondegenerate(sc)
    np.testing.assert_allclose(K_, K_.T, atol=1e-9)
    assert det > 1e-6


def test_structure_constant_entry():
    basis = builtin_generators("Gamma", K)
    sc = structure_constants(basis, sample_points(6, 60))
    want = np.zeros(15)
    want[5] = 2.0  # [Gamma_7, Gamma_5] = 2 Gamma_6
    np.testing.assert_allclose(sc.c[6, 4], want, atol=1e-8)


def test_structure_constants_need_enough_points():
    basis = builtin_generators("Gamma", K)
    with pytest.raises(IllConditionedSampling):
        structure_constants(basis, sample_points(0, 20))
    # degenerate sampling: every point identical
    same = np.repeat(sample_points(0, 1), 40, axis=1)
    with pytest.raises(IllConditionedSampling):
        structure_constants(basis, same)


def test_abelian_killing_form_vanishes():
    toy = [_vf("dt", xi=1), _vf("dphi", ephi=1)]
    sc = structure_constants(toy, sample_points(0, 10))
    K_, det = killing_nondegenerate(sc)
    assert det == 0 and np.all(K_ == 0)


def test_subalgebra():
    rep = verify_subalgebra_A4511(FREE)
    assert rep.passed
    assert len(rep.relations) == 6
    assert rep.max_residual <= 1e-9


def test_linearize_examples():
    p = ModelParams.free(0.5)
    u, v = linearize(p, (2.0, math.pi))
    assert abs(u) < 1e-15 and v == pytest.approx(2)
    r, phi = inverse_linearize(p, 0.0, 2.0)
    assert (r, phi) == pytest.approx((2, math.pi))
    assert linearize(ModelParams.free(0.3), (1.0, 0.0)) == pytest.approx((1, 0))
    u, v, ud, vd = linearize(p, State(0, 1.0, 0.0, 0.5, 2.0))
    assert (u, v, ud, vd) == pytest.approx((1, 0, 0.5, 1.0))


def test_linearize_straightens_free_motion():
    traj = integrate(FREE, State(0, 1.3, 0.2, 0.4, 0.9), 3.0, t_eval=np.linspace(0, 3, 301))
    u, v = linearize(FREE, (traj.r, traj.phi))
    h = traj.t[1] - traj.t[0]
    assert np.max(np.abs(np.diff(u, 2))) / h**2 <= 1e-5
    assert np.max(np.abs(np.diff(v, 2))) / h**2 <= 1e-5


# --- action on wave functions


def _points(seed=0, n=50):
    return sample_points(np.random.default_rng(seed), n)


def test_homogeneity_acts_as_identity():
    v = PdeVariant.make("noether_free", K)
    psi = bessel_solution(v, 1, 0.7)
    pts = _points()
    Q = evolutionary_apply(generator("Lambda_9", K), psi, pts)
    np.testing.assert_allclose(Q.value, jc.evaluate(psi, pts), rtol=1e-14)


def test_time_translation_multiplies_by_energy():
    v = PdeVariant.make("noether_free", K)
    eps = 0.7
    psi = bessel_solution(v, 2, eps)
    pts = _points(1)
    Q = evolutionary_apply(generator("Lambda_8", K), psi, pts)
    np.testing.assert_allclose(Q.value, 1j * eps * jc.evaluate(psi, pts), rtol=1e-12, atol=1e-14)
    assert action_residual(generator("Lambda_8", K), v, psi, pts) <= 1e-9


def test_boost_preserved_only_by_noether_equation():
    pts = _points(2)
    boost = corrected_generator("Lambda_2", K)
    for p, eps in [(1, 0.7), (0, 1.2)]:
        noe = PdeVariant.make("noether_free", K)
        assert action_residual(boost, noe, bessel_solution(noe, p, eps), pts) <= 1e-8
    kow = PdeVariant.make("kowalski_free", K)
    assert action_residual(boost, kow, bessel_solution(kow, 1, 0.7), pts) >= 1e-2


def test_printed_lambda2_fails():
    # recorded misprint: the printed psi coefficient carries an extra k^2
    noe = PdeVariant.make("noether_free", K)
    psi = bessel_solution(noe, 1, 0.7)
    assert action_residual(generator("Lambda_2", K), noe, psi, _points(3)) >= 1e-2


def test_omega6_open_question():
    v = PdeVariant.make("noether_ho", K, W)
    psi = closed_form_eigenfunction(v, 1, 1)
    pts = _points(4)
    assert action_residual(generator("Omega_6", K, W), v, psi, pts) >= 1e-2
    fixed = corrected_generator("Omega_6", K, W)
    assert fixed.name == "Omega_6*"
    assert action_residual(fixed, v, psi, pts) <= 1e-8


@pytest.mark.parametrize("name", [f"Lambda_{i}" for i in range(1, 10)])
def test_lambda_family_preserves_noether_free(name):
    v = PdeVariant.make("noether_free", K)
    X = corrected_generator(name, K)
    pts = _points(5)
    for p, eps in [(0, 0.9), (1, 0.4), (-2, 1.3)]:
        assert action_residual(X, v, bessel_solution(v, p, eps), pts) <= 1e-8


@pytest.mark.parametrize("name", [f"Omega_{i}" for i in range(1, 10)])
def test_omega_family_preserves_noether_ho(name):
    v = PdeVariant.make("noether_ho", K, W)
    X = corrected_generator(name, K, W)
    pts = _points(6)
    for n, p in [(0, 0), (1, 1), (2, -2)]:
        assert action_residual(X, v, closed_form_eigenfunction(v, n, p), pts) <= 1e-8


@pytest.mark.parametrize("tag,family,omega", [("kowalski_free", "Upsilon", None), ("kowalski_ho", "Pi", W)])
def test_rival_families_preserve_rival_equations(tag, family, omega):
    v = PdeVariant.make(tag, K, omega)
    pts = _points(7)
    if v.tag.is_ho:
        sols = [closed_form_eigenfunction(v, n, p) for n, p in [(0, 0), (1, 2)]]
    else:
        sols = [bessel_solution(v, p, e) for p, e in [(0, 0.9), (1, 0.5)]]
    for X in builtin_generators(family, K, omega):
        X = corrected_generator(X.name, K, omega)
        for psi in sols:
            assert action_residual(X, v, psi, pts) <= 1e-8, X.name
