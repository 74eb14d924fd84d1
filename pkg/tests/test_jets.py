import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varprolong.errors import NonzeroInnerConstant, NotInvertible, OrderExceeded, OrderMismatch, ZeroConstantTerm
from varprolong.jets import (TaylorScalar, make_tower, taylor_arith, taylor_compose, taylor_invert,
                             total_derivative_read, tower_part)

coef = st.floats(-2.0, 2.0, allow_nan=False)


def series(n):
    return st.lists(coef, min_size=n, max_size=n)


def T(c):
    return TaylorScalar(np.asarray(c, dtype=float))


# --- hand examples ----------------------------------------------------------
def test_product_of_conjugates():
    assert np.allclose(taylor_arith(T([1, 1, 0]), T([1, -1, 0]), "mul").coeffs, [1, 0, -1])


def test_sqrt_of_square():
    assert np.allclose(taylor_arith(T([1, 2, 1]), op="sqrt").coeffs, [1, 1, 0])


def test_atan_series():
    assert np.allclose(taylor_arith(T([0, 1, 0, 0]), op="atan").coeffs, [0, 1, 0, -1 / 3])


def test_compose_examples():
    assert np.allclose(taylor_compose(T([0, 1, 0]), T([0, 2, 0])).coeffs, [0, 2, 0])
    assert np.allclose(taylor_compose(T([0, 0, 1, 0, 0]), T([0, 1, 1, 0, 0])).coeffs, [0, 0, 1, 2, 1])
    exp3 = T([1, 1, 0.5, 1 / 6])
    assert np.allclose(taylor_compose(exp3, T([0, 1, 1, 0])).coeffs, [1, 1, 1.5, 7 / 6])


def test_invert_examples():
    assert np.allclose(taylor_invert(T([0, 1, 0, 0])).coeffs, [0, 1, 0, 0])
    assert np.allclose(taylor_invert(T([0, 2, 0, 0])).coeffs, [0, 0.5, 0, 0])
    assert np.allclose(taylor_invert(T([0, 1, 1, 0])).coeffs, [0, 1, -1, 2])


def test_total_derivative_read():
    assert total_derivative_read(T([5, 0, 0]), 0) == 5
    assert total_derivative_read(T([0, 0, 3]), 2) == 6
    t0 = 0.7
    assert total_derivative_read(T([t0**2, 2 * t0, 1]), 2) == 2
    with pytest.raises(OrderExceeded):
        total_derivative_read(T([1, 2]), 3)


def test_errors():
    with pytest.raises(ZeroConstantTerm):
        taylor_arith(T([0, 1, 0]), op="sqrt")
    with pytest.raises(ZeroConstantTerm):
        T([1, 0]) / T([0, 1])
    with pytest.raises(NonzeroInnerConstant):
        taylor_compose(T([1, 1, 0]), T([0.5, 1, 0]))
    with pytest.raises(NotInvertible):
        taylor_invert(T([0, 0, 1]))
    with pytest.raises(OrderMismatch):
        taylor_compose(T([1, 1, 0]), T([0, 1]))
    with pytest.raises(ValueError):
        taylor_arith(T([1, 1]), T([1, 1]), "frobnicate")


# --- oracle: elementary functions against known Taylor expansions ----------
def test_elementary_functions_match_closed_forms():
    a = 0.3
    K = 6
    x = T([a, 1] + [0] * (K - 1))
    k = np.arange(K + 1)
    fact = np.array([math.factorial(i) for i in k], dtype=float)
    assert np.allclose(x.exp().coeffs, np.exp(a) / fact)
    sin_d = np.array([math.sin(a + i * math.pi / 2) for i in k])
    assert np.allclose(x.sin().coeffs, sin_d / fact)
    assert np.allclose(x.cos().coeffs, np.array([math.cos(a + i * math.pi / 2) for i in k]) / fact)
    log_c = np.r_[math.log(a), [(-1) ** (i + 1) / (i * a**i) for i in k[1:]]]
    assert np.allclose(x.log().coeffs, log_c)
    p = 1.7
    binom = np.array([math.prod(p - j for j in range(i)) for i in k]) / fact
    assert np.allclose(x.pow_real(p).coeffs, binom * a ** (p - k))


# --- properties -------------------------------------------------------------
@given(series(5), series(5), st.integers(0, 4), st.sampled_from(["add", "sub", "mul", "div"]))
def test_truncation_causality(a, b, k, op):
    """Coefficient k depends only on inputs up to k."""
    a[0] = a[0] + 3.0
    b[0] = b[0] + 3.0
    full = taylor_arith(T(a), T(b), op).coeffs[k]
    short = taylor_arith(T(a[:k + 1]), T(b[:k + 1]), op).coeffs[k]
    assert math.isclose(full, short, rel_tol=1e-12, abs_tol=1e-12)


@given(coef, coef)
def test_constant_embedding_is_ring_morphism(r, s):
    R, S = TaylorScalar.constant(r, (4,)), TaylorScalar.constant(s, (4,))
    assert np.allclose((R * S).coeffs, [r * s, 0, 0, 0])
    assert np.allclose((R + S).coeffs, [r + s, 0, 0, 0])


@given(series(5))
def test_inverse_composes_to_identity(g):
    g[0] = 0.0
    g[1] = 0.5 + abs(g[1])
    h = taylor_invert(T(g))
    assert np.allclose(taylor_compose(T(g), h).coeffs, [0, 1, 0, 0, 0], atol=1e-10)
    assert np.allclose(taylor_compose(h, T(g)).coeffs, [0, 1, 0, 0, 0], atol=1e-10)


@settings(max_examples=50)
@given(st.floats(0.2, 2.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_tower_parts_match_finite_differences(x0, y0, z0):
    def f(x, y):
        return (x * y + 1.0).atan() * (x * x + y * y + 1.0).sqrt() if isinstance(x, TaylorScalar) else \
            math.atan(x * y + 1.0) * math.sqrt(x * x + y * y + 1.0)

    base_x = TaylorScalar.constant(x0, (1,))
    base_y = TaylorScalar.constant(y0, (1,))
    one, zero = TaylorScalar.constant(1.0, (1,)), TaylorScalar.constant(0.0, (1,))
    tx = make_tower(base_x, [one, one])
    ty = make_tower(base_y, [zero, zero])
    val = f(tx, ty)
    h = 1e-4
    d1 = (f(x0 + h, y0) - f(x0 - h, y0)) / (2 * h)
    d2 = (f(x0 + h, y0) - 2 * f(x0, y0) + f(x0 - h, y0)) / h**2
    assert math.isclose(float(tower_part(val, [1, 0]).const), d1, abs_tol=1e-6)
    assert math.isclose(float(tower_part(val, [1, 1]).const), d2, abs_tol=1e-5)
    assert math.isclose(float(tower_part(val, [0, 0]).const), f(x0, y0), rel_tol=1e-14)


def test_tower_nilpotency():
    e = make_tower(TaylorScalar.constant(0.0, (1,)), [TaylorScalar.constant(1.0, (1,))])
    assert np.allclose((e * e).data, 0.0)
