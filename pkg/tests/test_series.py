import math

import numpy as np
import pytest

from convexbilliards.series import (TPS2, arcsin_taylor, cos_taylor,
                                    sin_taylor, tps2_reciprocal,
                                    tps2_substitute, u_compose, u_derivative,
                                    u_integrate, u_mul, u_reciprocal, u_revert)


def test_taylor_tables():
    assert np.allclose(sin_taylor(5), [0, 1, 0, -1 / 6, 0, 1 / 120])
    assert np.allclose(cos_taylor(4), [1, 0, -0.5, 0, 1 / 24])
    assert np.allclose(arcsin_taylor(5), [0, 1, 0, 1 / 6, 0, 3 / 40])


def test_u_mul_and_compose():
    f = np.array([0.0, 1.0, 0.5])       # x + x^2/2
    g = np.array([0.0, 2.0, 0.0, 1.0])  # 2x + x^3
    fg = u_compose(f, g, 4)
    # f(g) = g + g^2/2 = 2x + x^3 + (4x^2 + 4x^4 + ...)/2
    assert np.allclose(fg, [0, 2, 2, 1, 2])


def test_u_revert_roundtrip():
    f = np.array([0.0, 1.0, -0.3, 0.2, 0.05, -0.01, 0.0])
    g = u_revert(f, 6)
    comp = u_compose(f, g, 6)
    ident = np.zeros(7)
    ident[1] = 1.0
    assert np.allclose(comp, ident, atol=1e-12)


def test_u_reciprocal():
    f = np.array([2.0, 1.0, 0.5])
    r = u_reciprocal(f, 5)
    prod = u_mul(f, r, 5)
    assert np.allclose(prod, [1, 0, 0, 0, 0, 0], atol=1e-13)


def test_tps2_multiplication_truncates():
    a = TPS2.variable(0, 3) + 1.0  # 1 + x
    b = TPS2.variable(1, 3)        # y
    prod = a * b
    assert prod.c[0, 1] == 1.0
    assert prod.c[1, 1] == 1.0
    # (1+x)^4 truncated at degree 3 loses the x^4 term
    p = (a * a) * (a * a)
    assert p.c[3, 0] == pytest.approx(4.0)


def test_tps2_eval_univariate():
    x = TPS2.variable(0, 3)
    s = x.eval_univariate(sin_taylor(5))
    assert s.c[1, 0] == pytest.approx(1.0)
    assert s.c[3, 0] == pytest.approx(-1 / 6)


def test_tps2_substitution_and_eval():
    # p(u, v) = u^2 + 3 v at u = x + y, v = x y
    p = TPS2(3)
    p.c[2, 0] = 1.0
    p.c[0, 1] = 3.0
    u = TPS2.variable(0, 3) + TPS2.variable(1, 3)
    v = TPS2.variable(0, 3) * TPS2.variable(1, 3)
    q = tps2_substitute(p, u, v)
    for x, y in [(0.1, 0.2), (-0.05, 0.3)]:
        assert q(x, y) == pytest.approx((x + y) ** 2 + 3 * x * y, abs=1e-14)


def test_tps2_reciprocal():
    f = 1.0 + TPS2.variable(0, 3) * 0.5 + TPS2.variable(1, 3) * (-0.2)
    r = tps2_reciprocal(f)
    prod = f * r
    expect = np.zeros((4, 4))
    expect[0, 0] = 1.0
    assert np.allclose(prod.c, expect, atol=1e-13)


def test_u_derivative_integrate():
    f = np.array([1.0, 2.0, 3.0])
    assert np.allclose(u_derivative(f), [2.0, 6.0])
    assert np.allclose(u_integrate(np.array([2.0, 6.0])), [0.0, 2.0, 3.0])
