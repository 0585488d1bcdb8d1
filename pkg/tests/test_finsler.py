import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerb import derivkit as dk
from finslerb.errors import DomainError, ValidationError
from finslerb.finsler import (
    BundlePoint,
    FinslerModel,
    cartan_tensor,
    contracted_cartan,
    energy,
    fundamental_tensor,
)

from conftest import bp, points, randers2, randers3, sphere3


def randers_b05():
    return FinslerModel.randers([["1", "0"], ["0", "1"]], ["0.5", "0"])


def test_euclidean_energy():
    assert energy(FinslerModel.euclidean(2), bp([0, 0], [3, 4])) == pytest.approx(25.0)


def test_randers_energy():
    assert energy(randers_b05(), bp([0, 0], [1, 0])) == pytest.approx(2.25)


def test_zero_direction_rejected():
    with pytest.raises((DomainError, ValueError)):
        energy(FinslerModel.euclidean(2), bp([0, 0], [0, 0]))


def test_randers_admissibility():
    with pytest.raises(ValidationError):
        FinslerModel.randers([["1", "0"], ["0", "1"]], ["1.2", "0"])


def test_euclidean_metric_identity():
    mv = fundamental_tensor(FinslerModel.euclidean(3), bp([1, 2, 3], [0.1, -2, 0.5]))
    assert np.allclose(mv.g, np.eye(3))


def test_quadratic_metric():
    m = FinslerModel.riemannian([["1", "0"], ["0", "4"]])
    for u in ([1, 0], [0.3, -2], [5, 5]):
        assert np.allclose(fundamental_tensor(m, bp([0.2, 0.1], u)).g, np.diag([1.0, 4.0]))


def test_randers_metric_matches_fd_hessian():
    m = randers_b05()
    p = bp([0, 0], [1, 0])
    g = fundamental_tensor(m, p).g
    f = lambda u: float(dk.value_of(m.F2(p.x, u)))
    for i in range(2):
        for j in range(2):
            assert 0.5 * dk.partial_fd(f, p.u, (i, j)) == pytest.approx(g[i, j], abs=1e-6)


def test_randers_cartan_matches_fd():
    m = randers_b05()
    p = bp([0, 0], [0, 1])
    C = cartan_tensor(m, p).data
    f = lambda u: float(dk.value_of(m.F2(p.x, u)))
    for idx in [(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]:
        assert 0.25 * dk.partial_fd(f, p.u, idx) == pytest.approx(C[idx], abs=1e-5)


def test_cartan_radial_and_symmetric():
    m = randers_b05()
    p = bp([0, 0], [1, 0])
    C = cartan_tensor(m, p).data
    assert np.abs(np.einsum("ijk,i->jk", C, p.u)).max() < 1e-8
    assert np.allclose(C, C.transpose(1, 0, 2)) and np.allclose(C, C.transpose(2, 1, 0))


@pytest.mark.parametrize("make", [sphere3, lambda: FinslerModel.riemannian([["1+x2^2", "0.3*x1"], ["0.3*x1", "2"]])])
def test_riemannian_cartan_vanishes(make):
    m = make()
    for p in points(m, 10):
        assert np.abs(cartan_tensor(m, p).data).max() < 1e-9
        assert np.abs(contracted_cartan(m, p).data).max() < 1e-9


def test_contracted_cartan_identity():
    m = randers3()
    for p in points(m, 10, seed=3):
        g = fundamental_tensor(m, p).g
        C, Cb = cartan_tensor(m, p).data, contracted_cartan(m, p).data
        assert np.allclose(np.einsum("kl,lij->kij", g, Cb), np.einsum("lij->lij", C.transpose(2, 0, 1)), atol=1e-8)
        assert np.abs(np.einsum("kij,i->kj", Cb, p.u)).max() < 1e-8


def test_metric_value_invariants():
    m = randers2()
    for p in points(m, 20, seed=5):
        mv = fundamental_tensor(m, p)
        assert np.allclose(mv.g, mv.g.T, atol=1e-12)
        assert np.linalg.eigvalsh(mv.g).min() > 0
        assert np.allclose(mv.g @ mv.ginv, np.eye(2), atol=1e-10)
        assert mv.r2 == pytest.approx(float(dk.value_of(m.F2(p.x, p.u))), abs=1e-10)


lam = st.sampled_from([0.5, 2.0, 3.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), lam)
def test_homogeneity(seed, s):
    m = randers2()
    p = points(m, 1, seed=seed)[0]
    q = BundlePoint(p.x, s * p.u)
    assert energy(m, q) == pytest.approx(s * s * energy(m, p), rel=1e-12)
    assert np.allclose(fundamental_tensor(m, q).g, fundamental_tensor(m, p).g, atol=1e-8)
    assert np.allclose(cartan_tensor(m, q).data, cartan_tensor(m, p).data / s, atol=1e-8)


def test_custom_model_expression():
    m = FinslerModel.custom(2, "(1+x1^2)*u1^2 + u2^2")
    g = fundamental_tensor(m, bp([2, 0], [1, 1])).g
    assert np.allclose(g, np.diag([5.0, 1.0]))
