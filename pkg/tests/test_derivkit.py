import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerb import derivkit as dk
from finslerb.errors import DomainError


def test_square_jet():
    j = dk.taylor_jet(lambda x: x * x, 3.0, 2)
    assert j.partial(()) == 9.0
    assert j.partial((0,)) == 6.0
    assert j.partial((0, 0)) == 2.0


def test_bilinear_mixed_partial():
    j = dk.taylor_jet(lambda z: z[0] * z[1], [2.0, 5.0], 2)
    assert j.partial((0, 1)) == pytest.approx(1.0, abs=1e-15)
    assert j.partial((1, 0)) == j.partial((0, 1))


def test_sqrt_third_derivative():
    j = dk.taylor_jet(dk.sqrt, 4.0, 3)
    assert j.partial((0, 0, 0)) == pytest.approx(0.01171875, rel=1e-14)


def test_order_zero_is_value():
    f = lambda z: dk.exp(z[0]) * dk.sin(z[1]) + z[0] ** 3
    p = [0.3, -1.2]
    assert float(dk.taylor_jet(f, p, 4).value) == pytest.approx(math.exp(0.3) * math.sin(-1.2) + 0.027)


def test_domain_error_at_zero():
    with pytest.raises(DomainError):
        dk.taylor_jet(lambda z: dk.sqrt(z[0] * z[0] + z[1] * z[1]), [0.0, 0.0], 2)


def test_fd_sin():
    assert dk.partial_fd(math.sin, 0.0, (0,)) == pytest.approx(1.0, abs=1e-8)


def test_fd_quartic_third():
    assert dk.partial_fd(lambda x: x**4, 1.0, (0, 0, 0)) == pytest.approx(24.0, abs=1e-6)


def test_fd_stencil_leaving_domain():
    with pytest.raises(DomainError):
        dk.partial_fd(lambda x: math.sqrt(x) if x > 0 else float("nan"), 1e-4, (0, 0))


def _mix(c):
    def f(z):
        x, y = z[0], z[1]
        return c[0] * x**3 * y + c[1] * dk.sin(x + c[2] * y) + c[3] * dk.exp(0.5 * y) * x**2 + c[4] * y**4

    def fn(q):
        x, y = q
        return c[0] * x**3 * y + c[1] * math.sin(x + c[2] * y) + c[3] * math.exp(0.5 * y) * x**2 + c[4] * y**4

    return f, fn


coef = st.floats(-2, 2, allow_nan=False)
pt = st.floats(-1.5, 1.5, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.tuples(coef, coef, coef, coef, coef), pt, pt)
def test_fd_agrees_with_jets(c, x, y):
    f, fn = _mix(c)
    j = dk.taylor_jet(f, [x, y], 4)
    for idx in [(0,), (1,), (0, 1), (1, 1), (0, 0, 1), (0, 1, 1, 1)]:
        fd = dk.partial_fd(fn, [x, y], idx)
        # order-4 FD steps trade some accuracy for stability; 1e-6 relative up to order 3
        rel = 1e-6 if len(idx) <= 3 else 1e-5
        assert dk.fd_close(fd, float(j.partial(idx)), rel=rel, abs_small=1e-8 if len(idx) <= 3 else 1e-6)


@settings(max_examples=50, deadline=None)
@given(st.lists(coef, min_size=6, max_size=6), st.lists(coef, min_size=6, max_size=6), pt, pt)
def test_leibniz_rule(a, b, x, y):
    mono = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def poly(c):
        return lambda z: sum(ci * z[0] ** i * z[1] ** j for ci, (i, j) in zip(c, mono))

    f, g = poly(a), poly(b)
    jf, jg = dk.taylor_jet(f, [x, y], 3), dk.taylor_jet(g, [x, y], 3)
    jfg = dk.taylor_jet(lambda z: f(z) * g(z), [x, y], 3)
    prod = jf * jg
    assert np.allclose(prod.c, jfg.c, atol=1e-10)
    # second mixed partial by the product rule, written out
    d = lambda j, idx: float(j.partial(idx))
    lhs = d(jfg, (0, 1))
    rhs = d(jf, (0, 1)) * d(jg, ()) + d(jf, (0,)) * d(jg, (1,)) + d(jf, (1,)) * d(jg, (0,)) + d(jf, ()) * d(jg, (0, 1))
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_mixed_partials_symmetric():
    j = dk.taylor_jet(lambda z: dk.exp(z[0] * z[1]) * dk.cos(z[2]), [0.2, 0.7, -0.4], 3)
    assert j.partial((0, 1, 2)) == j.partial((2, 1, 0)) == j.partial((1, 2, 0))


def test_order_limit():
    with pytest.raises(ValueError):
        dk.taylor_jet(lambda x: x, 1.0, 6)
