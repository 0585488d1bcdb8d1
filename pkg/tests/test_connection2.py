import numpy as np
import pytest

from finslerb import chern, connection2, gnat
from finslerb.finsler import FinslerModel

from conftest import conformal_flat, points, randers2, randers3, sphere3

MODELS = [lambda: FinslerModel.euclidean(2), sphere3, randers2]


def test_sasaki_euclidean_connectors_vanish(rng):
    m = FinslerModel.euclidean(2)
    for p in points(m, 4):
        cv = connection2.pq_tensors(gnat.sasaki(), m, p, rng.normal(size=2), rng.normal(size=2))
        assert all(np.abs(v).max() == 0 for v in cv.as_dict().values())


def test_sasaki_riemannian_qhh(rng):
    m = sphere3()
    for p in points(m, 4):
        geo = chern.local_geometry(m, p)
        s1, s2 = rng.normal(size=3), rng.normal(size=3)
        cv = connection2.pq_tensors(gnat.sasaki(), m, p, s1, s2)
        assert np.allclose(cv.Qhh, -0.5 * geo.curv(s1, s2, p.u), atol=1e-12)


def test_connectors_bilinear(rng, general_specs):
    m = randers2()
    p = points(m, 1)[0]
    a, b, c = rng.normal(size=(3, 2))
    for spec in general_specs:
        lhs = connection2.pq_tensors(spec, m, p, 2 * a - b, c).as_dict()
        r1 = connection2.pq_tensors(spec, m, p, a, c).as_dict()
        r2 = connection2.pq_tensors(spec, m, p, b, c).as_dict()
        for k in lhs:
            assert np.allclose(lhs[k], 2 * r1[k] - r2[k], atol=1e-12)


@pytest.mark.parametrize("make", MODELS)
def test_closed_form_matches_koszul(make, kk_specs, general_specs):
    m = make()
    for spec in kk_specs + general_specs:
        for p in points(m, 4, seed=21):
            closed = connection2.closed_form_connection(spec, m, p)
            oracle = connection2.koszul_connection(spec, m, p)
            assert np.abs(closed - oracle).max() < 1e-5
            r = connection2.connection_residuals(spec, m, p, closed)
            assert r["compat"] < 1e-6 and r["torsion"] < 1e-6


def test_koszul_fd_path_agrees():
    m, spec = randers2(), gnat.cheeger_gromoll()
    p = points(m, 1, seed=5)[0]
    assert np.allclose(connection2.koszul_connection(spec, m, p, "fd"), connection2.koszul_connection(spec, m, p), atol=1e-6)


def test_koszul_oracle_euclidean_sasaki():
    m = FinslerModel.euclidean(2)
    p = points(m, 1)[0]
    for A in range(4):
        for B in range(4):
            assert np.abs(connection2.koszul_oracle(gnat.sasaki(), m, p, A, B).coords).max() < 1e-12


def test_trace_expression_matches_connectors(general_specs, rng):
    m = randers3()
    for spec in general_specs:
        for p in points(m, 3):
            geo = chern.local_geometry(m, p)
            X = rng.normal(size=3)
            Phh, Qhv = connection2.geodesic_trace_terms(spec, m, p, X)
            pv = spec.at(geo.r2, 2)
            assert np.allclose(Phh, connection2.geodesic_trace_vector(pv, geo, X), atol=1e-8)
            assert np.allclose(Phh + Qhv, 0, atol=1e-8)


@pytest.mark.parametrize("make", [lambda: FinslerModel.euclidean(2), conformal_flat, randers2, randers3])
def test_incompressible(make, kk_specs, general_specs):
    m = make()
    for spec in kk_specs + general_specs:
        for p in points(m, 4, seed=31):
            d = connection2.divergence_geodesic(spec, m, p)
            assert abs(d.trace) < 1e-7 and abs(d.density) < 1e-7


def test_fibers_sasaki_riemannian():
    m = sphere3()
    v = connection2.fiber_geodesic_check(gnat.sasaki(), m, points(m, 6))
    assert v.kind == "totally_geodesic" and v.agree


def test_fibers_alpha2_constant():
    m = sphere3()
    spec = gnat.FNaturalSpec.from_profiles(a1=1, a2=1, a3=1)
    v = connection2.fiber_geodesic_check(spec, m, points(m, 6))
    assert v.c == pytest.approx(1.0, abs=1e-10)
    assert v.agree


def test_fibers_non_landsberg_violated(kk_specs):
    m = randers2()
    for spec in kk_specs:
        v = connection2.fiber_geodesic_check(spec, m, points(m, 8))
        assert v.kind == "violated" and v.witness is not None and v.agree
