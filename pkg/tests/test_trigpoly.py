import math

import numpy as np
import pytest

from convexbilliards.trigpoly import TrigPoly, adaptive_fit, fit_trigpoly


def reference_eval(poly, phi):
    out = poly.a0 * np.ones_like(phi)
    for k in range(1, poly.degree + 1):
        out += poly.ak[k - 1] * np.cos(k * phi) + poly.bk[k - 1] * np.sin(k * phi)
    return out


def test_eval_matches_reference():
    rng = np.random.default_rng(1)
    poly = TrigPoly(0.7, rng.normal(size=6), rng.normal(size=6))
    phi = rng.uniform(-10, 10, 200)
    assert np.allclose(poly(phi), reference_eval(poly, phi), atol=1e-13)


def test_derivative_matches_finite_difference():
    poly = TrigPoly(1.0, [0.3, -0.2, 0.05], [0.0, 0.1, -0.04])
    dp = poly.derivative()
    phi = np.linspace(0, 2 * math.pi, 37)
    h = 1e-6
    fd = (poly(phi + h) - poly(phi - h)) / (2 * h)
    assert np.allclose(dp(phi), fd, atol=1e-8)


def test_second_derivative():
    poly = TrigPoly(1.0, [0.0, 0.3])
    assert poly.derivative(2)(0.0) == pytest.approx(-1.2, abs=1e-14)


def test_product_is_exact():
    rng = np.random.default_rng(2)
    f = TrigPoly(0.5, rng.normal(size=3), rng.normal(size=3))
    g = TrigPoly(-0.2, rng.normal(size=4), rng.normal(size=4))
    prod = f * g
    assert prod.degree == 7
    phi = rng.uniform(0, 2 * math.pi, 50)
    assert np.allclose(prod(phi), f(phi) * g(phi), atol=1e-13)


def test_cumulative_matches_quadrature():
    poly = TrigPoly(1.0, [0.2, -0.1], [0.3, 0.0])
    grid = np.linspace(0.0, 5.0, 100001)
    trapz = np.trapezoid(poly(grid), grid)
    assert poly.cumulative(5.0) == pytest.approx(trapz, abs=1e-9)


def test_cumulative_full_turn_is_mean():
    poly = TrigPoly(1.3, [0.2], [0.4])
    assert poly.cumulative(2 * math.pi) == pytest.approx(2 * math.pi * 1.3, abs=1e-12)


def test_max_abs_certified_within_one_percent():
    poly = TrigPoly(0.0, [0.0, 1.0])  # cos(2 phi), sup = 1
    bound = poly.max_abs(rel_slack=0.01)
    assert 1.0 <= bound <= 1.01


def test_min_bound_positivity():
    assert TrigPoly(1.0, [0.0, 0.5]).is_positive()
    assert not TrigPoly(1.0, [0.0, 1.5]).is_positive()


def test_shifted():
    poly = TrigPoly(0.3, [1.0, -0.5], [0.2, 0.7])
    shifted = poly.shifted(0.8)
    phi = np.linspace(0, 2 * math.pi, 17)
    assert np.allclose(shifted(phi), poly(phi + 0.8), atol=1e-13)


def test_taylor_coefficients():
    poly = TrigPoly(0.0, [1.0])  # cos(phi)
    taylor = poly.taylor(0.0, 4)
    assert np.allclose(taylor, [1.0, 0.0, -0.5, 0.0, 1.0 / 24.0], atol=1e-14)


def test_fit_recovers_exact_polynomial():
    rng = np.random.default_rng(3)
    poly = TrigPoly(0.9, [0.2, 0.1, -0.3], [0.0, -0.2, 0.15])
    nodes = rng.uniform(0, 2 * math.pi, 400)
    fitted, resid = fit_trigpoly(nodes, poly(nodes), 5)
    assert resid < 1e-12
    phi = np.linspace(0, 2 * math.pi, 100)
    assert np.allclose(fitted(phi), poly(phi), atol=1e-11)


def test_adaptive_fit_reaches_tolerance():
    nodes = np.linspace(0, 2 * math.pi, 2048, endpoint=False)
    values = np.exp(0.3 * np.cos(nodes))  # analytic, fast Fourier decay
    poly, resid = adaptive_fit(nodes, values, 1e-11)
    assert resid < 1e-11
