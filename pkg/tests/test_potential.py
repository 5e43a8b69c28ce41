import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from troamoeba.errors import BoundaryEvaluation, NotPositiveDefinite
from troamoeba.potential import (
    JetFunction,
    PotentialFamily,
    Quadratic,
    QuarticRadial,
    boundary_regularity_check,
    complex_structure,
    dual_potential,
    dual_potential_argument,
    eval_gp,
    eval_gs,
    identity_quadratic,
    interior_grid,
    kappa,
    kappa_inv,
    legendre_convergence_error,
    legendre_psi,
)

from conftest import G1, G2, interior_points


def test_gp_segment_midpoint(seg):
    j = eval_gp(seg, [0.5])
    assert j.value == pytest.approx(-math.log(2) / 2, abs=1e-15)
    assert j.gradient == pytest.approx([0.0], abs=1e-15)
    assert np.allclose(j.hessian, [[2.0]])


def test_gp_simplex_centroid(simplex):
    j = eval_gp(simplex, [1 / 3, 1 / 3])
    assert j.value == pytest.approx(-math.log(3) / 2)
    assert np.allclose(j.gradient, 0, atol=1e-15)


def test_gp_boundary(seg):
    with pytest.raises(BoundaryEvaluation):
        eval_gp(seg, [0.0])
    g = [eval_gp(seg, [10.0 ** -k]).gradient[0] for k in range(2, 8)]
    assert all(a > b for a, b in zip(g, g[1:])) and g[-1] < -7


def test_gs(seg_family, seg):
    assert np.allclose(eval_gs(seg_family, 0, [0.3]).hessian, eval_gp(seg, [0.3]).hessian)
    assert np.allclose(eval_gs(seg_family, 4, [0.5]).hessian, [[6.0]])


def test_gs_linear_in_s(hexa_family, rng):
    X = interior_points(hexa_family.polytope, 10, rng)
    for x in X:
        h1, h2 = eval_gs(hexa_family, 1.5, x).hessian, eval_gs(hexa_family, 7.0, x).hessian
        assert np.allclose(h2 - h1, 5.5 * QuarticRadial().hess(x), rtol=1e-12, atol=1e-12)


def test_legendre_psi():
    assert np.allclose(legendre_psi(identity_quadratic(2), [0.3, 0.7]), [0.3, 0.7])
    q = Quadratic([[2, 1], [1, 3]], b=[1, -1])
    x = np.array([0.2, -0.4])
    u = legendre_psi(q, x)
    assert np.allclose(u, q.G @ x + q.b)
    assert np.allclose(legendre_psi(q, u, "inverse"), x, atol=1e-12)
    assert np.allclose(legendre_psi(QuarticRadial(), [1.0, 0.0]), [2.0, 0.0])
    assert np.allclose(legendre_psi(QuarticRadial(), [2.0, 0.0], "inverse"), [1.0, 0.0], atol=1e-10)


def test_quadratic_must_be_positive():
    with pytest.raises(NotPositiveDefinite):
        Quadratic([[1, 2], [2, 1]])


@pytest.mark.parametrize("s", [0.5, 3.0, 100.0])
def test_kappa_segment_closed_form(seg_family, s):
    for x in (0.1, 0.5, 0.93):
        assert kappa(seg_family, s, [x])[0] == pytest.approx(x + math.log(x / (1 - x)) / (2 * s), rel=1e-13)
    assert kappa(seg_family, s, [0.5])[0] == pytest.approx(0.5)


def test_kappa_simplex_centroid(simplex_family):
    for s in (1.0, 10.0, 1e3):
        assert np.allclose(kappa(simplex_family, s, [1 / 3, 1 / 3]), [1 / 3, 1 / 3], atol=1e-15)


def test_kappa_distance_to_legendre(hexa_family, rng):
    for x in interior_points(hexa_family.polytope, 10, rng):
        s = 7.0
        d = np.linalg.norm(kappa(hexa_family, s, x) - QuarticRadial().grad(x))
        assert d == pytest.approx(np.linalg.norm(eval_gp(hexa_family.polytope, x).gradient) / s, rel=1e-12)


def test_kappa_inv_examples(seg_family):
    for s in (1.0, 10.0, 1e4):
        assert kappa_inv(seg_family, s, [0.5])[0] == pytest.approx(0.5, abs=1e-12)
    # the true solution is within ~exp(-80) of the endpoint, i.e. 1.0 in double precision
    x = kappa_inv(seg_family, 10.0, [5.0])
    assert 0.999 < x[0] <= 1.0
    x = kappa_inv(seg_family, 10.0, [1.2])
    assert 0.98 < x[0] < 1.0 and kappa(seg_family, 10.0, x)[0] == pytest.approx(1.2, abs=1e-10)


@given(st.floats(0.02, 0.98), st.floats(0.02, 0.98), st.sampled_from([0.3, 2.0, 50.0, 1e3]))
def test_kappa_round_trip(a, b, s):
    from troamoeba.polytope import hexagon
    F = PotentialFamily(hexagon(), Quadratic(G1))
    x = np.array([2 * a - 1, 2 * b - 1])
    if np.min(F.polytope.ell(x)) <= 1e-3:
        return
    assert np.allclose(kappa_inv(F, s, kappa(F, s, x)), x, atol=1e-8)


def test_kappa_inv_extreme_inputs(simplex_family):
    # far outside grad psi(P) the solution hugs a vertex/edge at distances below 1e-300
    U = np.array([[-50.0, -50.0], [40.0, 40.0], [-30.0, 0.3], [3.0, -200.0]])
    T, res, ok = simplex_family.kappa_inv(100.0, U)
    assert ok.all() and np.all(simplex_family.polytope.ell(T) >= 0)


def test_complex_structure(hexa_family, rng):
    for x in interior_points(hexa_family.polytope, 5, rng):
        J, gamma = complex_structure(hexa_family, 3.0, x)
        assert np.allclose(J @ J, -np.eye(4), atol=1e-10)
        assert np.allclose(gamma, gamma.T) and np.linalg.eigvalsh(gamma).min() > 0
        assert np.linalg.det(gamma) == pytest.approx(1.0)


def test_complex_structure_segment(seg_family):
    J, _ = complex_structure(seg_family, 0.0, [0.5])
    assert np.allclose(J, [[0, -0.5], [2, 0]])


def test_dual_potential_self_dual(seg):
    F = PotentialFamily(seg, identity_quadratic(1), include_gp=False)
    for u in (-0.3, 0.2, 0.7):
        assert dual_potential(F, 1.0, [u]) == pytest.approx(u * u / 2, abs=1e-12)


def test_dual_potential_convex_and_gradient(simplex_family, rng):
    s = 2.0
    for _ in range(10):
        u1, u2 = rng.normal(size=2), rng.normal(size=2)
        mid = dual_potential(simplex_family, s, (u1 + u2) / 2)
        assert mid <= 0.5 * (dual_potential(simplex_family, s, u1) + dual_potential(simplex_family, s, u2)) + 1e-12
    u = np.array([0.4, -0.2])
    h = 1e-5
    fd = [(dual_potential(simplex_family, s, u + h * e) - dual_potential(simplex_family, s, u - h * e)) / (2 * h)
          for e in np.eye(2)]
    assert np.allclose(fd, dual_potential_argument(simplex_family, s, u), atol=1e-7)


def test_boundary_regularity(seg):
    F = PotentialFamily(seg, identity_quadratic(1))
    near = np.array([[10.0 ** -k] for k in range(2, 7)] + [[1 - 10.0 ** -k] for k in range(2, 7)])
    rep = boundary_regularity_check(F, near, s=0.0)
    assert rep.ok and np.allclose(rep.products, 0.5)
    assert boundary_regularity_check(F, near, s=5.0).ok
    bad_phi = JetFunction(lambda x: (-5 * x[0] ** 2, np.array([-10 * x[0]]), np.array([[-10.0]])), "concave")
    rep = boundary_regularity_check(PotentialFamily(seg, identity_quadratic(1), phi=bad_phi), [[0.5]], s=0.0)
    assert not rep.ok


def _fd_check(fun, X, h=1e-5):
    v, g, H = fun(X)
    n = X.shape[1]
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        vp, gp_, _ = fun(X + e)
        vm, gm, _ = fun(X - e)
        assert np.allclose((vp - vm) / (2 * h), g[:, i], rtol=1e-5, atol=1e-7)
        assert np.allclose((gp_ - gm) / (2 * h), H[:, :, i], rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("psi", [Quadratic(G1), Quadratic(G2), QuarticRadial()])
def test_jets_match_finite_differences(hexa, psi, rng):
    F = PotentialFamily(hexa, psi)
    X = interior_points(hexa, 1000, rng, margin=1e-2)
    _fd_check(lambda Y: F.gs(3.0, Y), X)
    _fd_check(F.gp, X)
    _fd_check(psi.evaluate, X)


@pytest.mark.parametrize("G", [G1, G2])
def test_kappa_lipschitz_lower_bound(simplex, G, rng):
    psi = Quadratic(G)
    F = PotentialFamily(simplex, psi)
    lam = np.linalg.eigvalsh(psi.G).min()
    A, B = interior_points(simplex, 200, rng), interior_points(simplex, 200, rng)
    for s in (1.0, 10.0, 1e3):
        d = np.linalg.norm(F.kappa(s, A) - F.kappa(s, B), axis=1)
        assert np.all(d >= lam * np.linalg.norm(A - B, axis=1) * (1 - 1e-12))


def test_legendre_convergence_decays_like_one_over_s(simplex_family):
    e = [legendre_convergence_error(simplex_family, s) for s in (1e2, 1e3, 1e4)]
    assert 9 < e[0] / e[1] < 11 and 9.5 < e[1] / e[2] < 10.5
    assert len(interior_grid(simplex_family.polytope)) > 100


def test_boundary_gradient_in_normal_cone(simplex):
    # approach the midpoint of the hypotenuse: outward cone is spanned by (1, 1)
    p = np.array([0.5, 0.5])
    out = np.array([1.0, 1.0]) / math.sqrt(2)
    tangent = np.array([1.0, -1.0]) / math.sqrt(2)
    angles = []
    for k in range(2, 14, 2):
        d = 10.0 ** -k
        x = p - d * out + math.sqrt(d) * tangent
        g = eval_gp(simplex, x).gradient
        angles.append(math.acos(np.clip(g @ out / np.linalg.norm(g), -1, 1)))
    assert all(a >= b for a, b in zip(angles, angles[1:])) and angles[-1] < 0.25
