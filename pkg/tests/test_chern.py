import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerb import chern
from finslerb import derivkit as dk
from finslerb.fields import Section, VectorFieldOnM
from finslerb.finsler import BundlePoint, FinslerModel

from conftest import bp, conformal_flat, points, randers2, randers3, randers_const, sphere3

X_FIELD = VectorFieldOnM.from_expressions(["x2", "0"])
Y_FIELD = VectorFieldOnM.from_expressions(["0", "x1"])
W_FIELD = VectorFieldOnM.from_expressions(["sin(x2)", "x1*x2 + 0.5"])


def test_euclidean_connection_vanishes():
    cv = chern.spray_and_connection(FinslerModel.euclidean(2), bp([0.3, 1], [1, 2]))
    assert np.abs(cv.spray).max() == 0 and np.abs(cv.N).max() == 0 and np.abs(cv.Gamma).max() == 0


def test_conformal_flat_christoffels():
    G = chern.spray_and_connection(conformal_flat(), bp([0.4, -0.2], [0.7, 0.3])).Gamma
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1.0
    expected[0, 1, 1] = -1.0
    expected[1, 0, 1] = expected[1, 1, 0] = 1.0
    assert np.allclose(G, expected, atol=1e-12)


@pytest.mark.parametrize("make", [randers2, randers3])
def test_connection_invariants(make):
    m = make()
    for p in points(m, 8, seed=2):
        cv = chern.spray_and_connection(m, p)
        assert np.allclose(cv.Gamma, cv.Gamma.transpose(0, 2, 1), atol=1e-12)
        assert np.allclose(cv.N, np.einsum("ijk,k->ij", cv.Gamma, p.u), atol=1e-8)
        for s in (0.5, 2.0):
            sp = chern.spray_and_connection(m, BundlePoint(p.x, s * p.u)).spray
            assert np.allclose(sp, s * s * cv.spray, rtol=1e-8, atol=1e-12)


def test_constant_randers_gamma_against_fd():
    """Gamma from the Christoffel formula with delta-derivatives of g taken by FD."""
    m = randers_const(2)
    p = bp([0.2, -0.1], [0.6, 0.8])
    cv = chern.spray_and_connection(m, p)
    n = 2

    def g_at(z):
        return chern.local_geometry(m, BundlePoint(z[:n], z[n:])).g

    z0 = p.z
    dg = np.zeros((n, n, 2 * n))
    for A in range(2 * n):
        for i in range(n):
            for j in range(n):
                dg[i, j, A] = dk.partial_fd(lambda z: g_at(z)[i, j], z0, (A,))
    D = dg[:, :, :n] - np.einsum("mk,ijm->ijk", cv.N, dg[:, :, n:])
    S = D + D.transpose(0, 2, 1) - D.transpose(1, 2, 0)
    G = 0.5 * np.einsum("li,ijk->ljk", np.linalg.inv(g_at(z0)), S)
    assert np.allclose(G, cv.Gamma, atol=1e-5)


def test_delta_derivative_euclidean_and_energy():
    f = lambda x, u: x[0] ** 2 * u[1] + x[1]
    d = chern.delta_derivative(FinslerModel.euclidean(2), bp([0.5, 0.1], [1, 2]), f)
    assert np.allclose(d, [2 * 0.5 * 2, 1.0])
    m = randers2()
    for p in points(m, 6):
        assert np.abs(chern.delta_derivative(m, p, lambda x, u: m.F2(x, u))).max() < 1e-7


def test_delta_derivative_linear():
    m = randers2()
    p = points(m, 1, seed=9)[0]
    f = lambda x, u: x[0] * u[0] * u[1]
    h = lambda x, u: dk.sin(x[1]) * u[0]
    lhs = chern.delta_derivative(m, p, lambda x, u: 2 * f(x, u) - 3 * h(x, u))
    rhs = 2 * chern.delta_derivative(m, p, f) - 3 * chern.delta_derivative(m, p, h)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_curvature_euclidean_and_antisymmetry():
    assert np.abs(chern.hh_curvature(FinslerModel.euclidean(3), bp([1, 0, 0], [0, 1, 0])).R).max() == 0
    m = randers3()
    for p in points(m, 5):
        R = chern.hh_curvature(m, p).R
        assert np.allclose(R, -R.transpose(0, 1, 3, 2), atol=1e-8)


def test_curvature_fd_strategy_agrees():
    m = randers2()
    p = points(m, 1, seed=4)[0]
    assert np.allclose(chern.hh_curvature(m, p, "jet").R, chern.hh_curvature(m, p, "fd").R, atol=1e-4)


def test_sphere_sectional_curvature_one():
    m = sphere3()
    for p in points(m, 5):
        geo = chern.local_geometry(m, p)
        e1, e2 = np.eye(3)[0], np.eye(3)[1]
        num = geo.curv4(e1, e2, e2, e1)
        den = geo.gdot(e1, e1) * geo.gdot(e2, e2) - geo.gdot(e1, e2) ** 2
        # sign follows R(s1,s2)s3 = nabla_1 nabla_2 s3 - ...; the round sphere has |K| = 1
        assert abs(num / den) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("make", [sphere3, conformal_flat])
def test_riemannian_reduction(make):
    m = make()
    for p in points(m, 8):
        r = chern.riemannian_reduction_residuals(m, p)
        assert r["cartan"] < 1e-9 and r["landsberg"] < 1e-8
        assert r["christoffel"] < 1e-8 and r["riemann"] < 1e-6


def test_landsberg_properties():
    m = randers3()
    for p in points(m, 8, seed=6):
        lv = chern.landsberg(m, p)
        L = lv.Llow
        assert np.allclose(L, L.transpose(1, 0, 2), atol=1e-8)
        assert np.allclose(L, L.transpose(0, 2, 1), atol=1e-8)
        assert np.abs(np.einsum("ijk,i->jk", L, p.u)).max() < 1e-8
    assert np.abs(chern.landsberg(sphere3(), points(sphere3(), 1)[0]).Llow).max() < 1e-10


def test_landsberg_nonzero_for_x_dependent_randers():
    m = randers2()
    assert max(np.abs(chern.landsberg(m, p).Llow).max() for p in points(m, 5)) > 1e-3


def test_berwald_definitions():
    m = randers3()
    for p in points(m, 5, seed=8):
        geo = chern.local_geometry(m, p)
        bv = chern.berwald(m, p)
        RU = np.einsum("lkcd,k->lcd", geo.R, p.u)
        B2 = -np.einsum("lcd,abl->abcd", RU, geo.C)  # other contraction order
        assert np.abs(bv.B - B2).max() < 1e-9
        r = np.random.default_rng(0)
        s1, s2, s3 = r.normal(size=(3, 3))
        lhs = geo.gdot(geo.bbar(s1, s2), s3)
        assert lhs == pytest.approx(geo.cartan(s1, s2, geo.curv(s3, p.u, p.u)), abs=1e-8)
    for m in (sphere3(), FinslerModel.euclidean(2)):
        assert np.abs(chern.berwald(m, points(m, 1)[0]).B).max() < 1e-12


@pytest.mark.parametrize("make,tol", [(lambda: FinslerModel.euclidean(2), 0.0), (conformal_flat, 1e-8), (randers2, 1e-6), (randers3, 1e-6)])
def test_chern_axioms(make, tol, rng):
    m = make()
    n = m.n
    for p in points(m, 8, seed=11):
        c, t = chern.chern_axiom_residuals(m, p, rng.normal(size=n), rng.normal(size=n), rng.normal(size=2 * n))
        assert c <= tol and t <= max(tol, 1e-6)


def test_lift_derivative_rules():
    m = randers2()
    for p in points(m, 8, seed=12):
        r = chern.lift_derivative_residuals(m, p, X_FIELD, Y_FIELD)
        assert max(r.values()) < 1e-7


def test_contraction_derivative_rules():
    m = randers2()
    s1, s2 = Section.of_field(W_FIELD), Section.canonical(2)
    for p in points(m, 8, seed=13):
        assert max(chern.contraction_derivative_residuals(m, p, X_FIELD, s1, s2).values()) < 1e-7


def test_lift_brackets():
    m = randers2()
    for p in points(m, 8, seed=14):
        assert max(chern.lift_bracket_residuals(m, p, W_FIELD, Y_FIELD).values()) < 1e-5


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_curvature_identities(seed):
    m = randers3()
    r = np.random.default_rng(seed)
    p = points(m, 1, seed=seed)[0]
    geo = chern.local_geometry(m, p)
    res = chern.curvature_identity_residuals(geo, *r.normal(size=(4, 3)))
    assert max(res.values()) < 1e-6


def test_second_covariant_derivative():
    assert np.abs(
        chern.second_covariant_derivative(
            FinslerModel.euclidean(2), bp([0.1, 0.2], [1, 0]), VectorFieldOnM.linear([[1, 2], [3, 4]]), [1, 0, 0, 1], [0, 1, 1, 0]
        )
    ).max() < 1e-14
    m = randers2()
    r = np.random.default_rng(3)
    for p in points(m, 6, seed=15):
        geo = chern.local_geometry(m, p)
        # horizontal arguments: nabla^2 xi(V, W) - nabla^2 xi(W, V) = R(W, V) xi
        v, w = r.normal(size=2), r.normal(size=2)
        V, W = np.concatenate([v, [0, 0]]), np.concatenate([w, [0, 0]])
        lhs = chern.second_covariant_derivative(m, p, W_FIELD, V, W) - chern.second_covariant_derivative(m, p, W_FIELD, W, V)
        assert np.allclose(lhs, geo.curv(w, v, W_FIELD.value(p.x)), atol=1e-6)


def test_second_covariant_along_zeta_fd():
    """nabla^2 xi(zeta, X^h) against FD of s -> nabla_zeta xi along the horizontal curve."""
    m = randers2()
    p = points(m, 1, seed=16)[0]
    geo = chern.local_geometry(m, p)
    X = np.array([0.4, -0.7])
    zeta = np.concatenate([p.u, [0, 0]])
    Xh = np.concatenate([X, [0, 0]])
    exact = chern.second_covariant_derivative(m, p, W_FIELD, zeta, Xh)

    def nz(z):
        q = BundlePoint(z[:2], z[2:])
        return chern.nabla_zeta(chern.local_geometry(m, q), W_FIELD)

    dirc = chern.to_coordinates(geo.N, Xh)
    d = np.array([dk.partial_fd(lambda s: nz(p.z + s * dirc)[k], 0.0, (0,)) for k in range(2)])
    # covariant derivative of the section nabla_zeta xi along X^h; the zeta-correction
    # nabla_{nabla_{X^h} zeta} xi vanishes because nabla_{X^h} U = 0
    cov = d + np.einsum("kij,i,j->k", geo.Gamma, X, nz(p.z))
    assert np.allclose(exact, cov, atol=1e-5)
