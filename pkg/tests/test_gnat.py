import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerb import derivkit as dk
from finslerb import gnat
from finslerb.errors import ValidationError
from finslerb.finsler import BundlePoint, FinslerModel

from conftest import bp, points, randers2


def test_profile_derivatives_match_fd():
    prof = gnat.ScalarProfile.from_expression("exp(-0.3*t)/(1+t^2)")
    for t in (0.2, 1.0, 3.5):
        d = prof.derivs(t, 2)
        assert d[1] == pytest.approx(dk.partial_fd(lambda s: float(prof(s)), t, (0,)), abs=1e-7)
        assert d[2] == pytest.approx(dk.partial_fd(lambda s: float(prof(s)), t, (0, 0)), abs=1e-7)


def test_derived_profiles():
    spec = gnat.FNaturalSpec.from_profiles(a1="1+t", a2="0.2", a3="t", b1="0.5", b2="0.1*t", b3="-0.25")
    t = 1.7
    v = spec.at(t, 0)
    f1, f2, f3 = v.a1 + t * v.b1, v.a2 + t * v.b2, v.a3 + t * v.b3
    assert v.f1 == pytest.approx(f1) and v.f2 == pytest.approx(f2) and v.F13 == pytest.approx(f1 + f3)
    assert v.alpha == pytest.approx(v.a1 * (v.a1 + v.a3) - v.a2**2)
    assert v.phi == pytest.approx(f1 * (f1 + f3) - f2**2)


def test_sasaki_euclidean_is_identity():
    m = FinslerModel.euclidean(3)
    for p in points(m, 5):
        assert np.allclose(gnat.evaluate_G(gnat.sasaki(), m, p).M2n, np.eye(6))


def test_cheeger_gromoll_vertical_entries():
    bm = gnat.evaluate_G(gnat.cheeger_gromoll(), FinslerModel.euclidean(2), bp([0, 0], [1, 0]))
    assert bm.Gvv[1, 1] == pytest.approx(0.5)
    assert bm.Gvv[0, 0] == pytest.approx(1.0)


def test_presets():
    s = gnat.preset("sasaki")
    assert [float(getattr(s, nm)(2.0)) for nm in gnat.PROFILE_NAMES] == [1, 0, 0, 0, 0, 0]
    cg = gnat.preset("cheeger_gromoll")
    for t in (0.3, 2.0):
        v = cg.at(t, 0)
        assert v.a1 == pytest.approx(1 / (1 + t)) and v.b1 == pytest.approx(1 / (1 + t))
        assert v.A == pytest.approx(1.0) and abs(v.Bh) < 1e-15 and v.a2 == 0 and v.b2 == 0
    assert gnat.preset("kk_type", "1", "t", "0.5", "0.1").is_kk_type
    assert gnat.preset("kaluza_klein", "1", "t", "0.5").is_kaluza_klein
    with pytest.raises(ValidationError) as err:
        gnat.preset("nope")
    assert err.value.key == "metric.preset"


def test_regularity():
    assert gnat.classify_regularity(gnat.sasaki()).kind == "riemannian"
    assert gnat.classify_regularity(gnat.cheeger_gromoll()).kind == "riemannian"
    # alpha = 1 - 4 < 0 but constant sign: pseudo-Riemannian (see decisions on the printed criterion)
    r = gnat.classify_regularity(gnat.FNaturalSpec.from_profiles(a1=1, a2=2))
    assert r.kind == "pseudo_riemannian"
    flip = gnat.FNaturalSpec.from_profiles(a1=1, a2="sqrt(t)")  # alpha = 1 - t changes sign
    r = gnat.classify_regularity(flip)
    assert r.kind == "degenerate" and r.witness_t is not None


def test_determinant_consistency():
    assert gnat.determinant_consistency(gnat.sasaki(), FinslerModel.euclidean(2), bp([0, 0], [1, 1]))
    m = randers2()
    for p in points(m, 40, seed=8):
        assert gnat.determinant_consistency(gnat.cheeger_gromoll(), m, p)
    flip = gnat.FNaturalSpec.from_profiles(a1=1, a2="sqrt(t)")
    p = bp([0, 0], [1, 0])  # t = 1 where alpha = 0
    assert gnat.determinant_consistency(flip, FinslerModel.euclidean(2), p)
    assert abs(np.linalg.det(gnat.evaluate_G(flip, FinslerModel.euclidean(2), p).M2n)) < 1e-10


def test_block_structure(kk_specs):
    m = randers2()
    for spec in kk_specs:
        for p in points(m, 5):
            bm = gnat.evaluate_G(spec, m, p)
            assert np.abs(bm.Ghv).max() < 1e-14
            assert np.allclose(bm.M2n, bm.M2n.T, atol=1e-12)


def test_coordinate_frame_change(general_specs):
    m = randers2()
    for spec in general_specs:
        p = points(m, 1, seed=3)[0]
        bm = gnat.evaluate_G(spec, m, p)
        N = chern_N(m, p)
        E = np.block([[np.eye(2), np.zeros((2, 2))], [-N, np.eye(2)]])
        assert np.allclose(E.T @ bm.M2n @ E, bm.lifted, atol=1e-12)


def chern_N(m, p):
    from finslerb.chern import local_geometry

    return local_geometry(m, p).N


@settings(max_examples=30)
@given(st.floats(0, 2 * np.pi), st.floats(0.2, 3.0), st.integers(0, 2))
def test_spherical_symmetry(angle, r, which):
    spec = [gnat.sasaki(), gnat.cheeger_gromoll(), gnat.FNaturalSpec.from_profiles(a1="1+t", a2="0.3", a3="t", b2="0.1")][which]
    m = FinslerModel.euclidean(2)
    O = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    u = np.array([r, 0.0])
    a = gnat.evaluate_G(spec, m, BundlePoint(np.zeros(2), u)).lifted
    b = gnat.evaluate_G(spec, m, BundlePoint(np.zeros(2), O @ u)).lifted
    T = np.block([[O, np.zeros((2, 2))], [np.zeros((2, 2)), O]])
    assert np.allclose(T.T @ b @ T, a, atol=1e-12)
