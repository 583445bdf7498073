import math

import numpy as np
import pytest

from convexbilliards import (ParametricSpec, TrigPoly, build_from_curvature,
                             build_from_parametric, ellipse, evaluate,
                             unit_circle)
from convexbilliards.errors import NonConvex, NotClosed
from conftest import random_profile_curve

TWO_PI = 2 * math.pi


class TestBuildFromCurvature:
    def test_unit_circle_positions(self, circle):
        assert np.allclose(circle.position(0.0), [0.0, 0.0], atol=1e-14)
        assert np.allclose(circle.position(math.pi / 2), [1.0, 1.0], atol=1e-14)
        assert np.allclose(circle.position(math.pi), [0.0, 2.0], atol=1e-14)

    def test_closure_residual_small(self):
        curve = build_from_curvature(TrigPoly(1.0, [0.0, 0.3]))
        assert curve.closure_residual() < 1e-12

    def test_harmonic_one_rejected(self):
        with pytest.raises(NotClosed):
            build_from_curvature(TrigPoly(1.0, [0.5]))

    def test_nonconvex_rejected(self):
        with pytest.raises(NonConvex):
            build_from_curvature(TrigPoly(1.0, [0.0, 1.5]))


class TestEvaluate:
    def test_circle_frames(self, circle):
        point, tau, eta, r = evaluate(circle, math.pi / 2)
        assert np.allclose(point, [1.0, 1.0], atol=1e-14)
        assert np.allclose(tau, [0.0, 1.0], atol=1e-14)
        assert np.allclose(eta, [-1.0, 0.0], atol=1e-14)
        assert r == pytest.approx(1.0)

    def test_circle_origin(self, circle):
        point, tau, eta, r = evaluate(circle, 0.0)
        assert np.allclose(point, [0.0, 0.0], atol=1e-14)
        assert np.allclose(tau, [1.0, 0.0])
        assert np.allclose(eta, [0.0, 1.0])

    def test_normal_points_inward(self, ell15):
        phi = np.linspace(0, TWO_PI, 64, endpoint=False)
        pts = ell15.position(phi)
        center = pts.mean(axis=0)
        eta = ell15.normal(phi)
        # stepping along the inward normal must reduce the distance to the center
        inner = pts + 0.05 * eta
        assert np.all(np.linalg.norm(inner - center, axis=1)
                      < np.linalg.norm(pts - center, axis=1))


class TestCurvatureDerivatives:
    def test_circle(self, circle):
        assert np.allclose(circle.radius_derivatives(0.7), [1, 0, 0, 0, 0], atol=1e-14)

    def test_profile_example(self):
        curve = build_from_curvature(TrigPoly(1.0, [0.0, 0.3]))
        r, rp, rpp, drds, d2rds2 = curve.radius_derivatives(0.0)
        assert r == pytest.approx(1.3)
        assert rp == pytest.approx(0.0, abs=1e-14)
        assert rpp == pytest.approx(-1.2)
        assert drds == pytest.approx(0.0, abs=1e-14)
        # (R'' R - R'^2)/R^3 = -1.2 * 1.3 / 1.3^3
        assert d2rds2 == pytest.approx(-1.2 / 1.3**2)

    def test_ellipse_axis_symmetry(self, ell21):
        # dR/ds = 0 at the minor-axis vertex (phi = 0)
        assert ell21.radius_derivatives(0.0)[3] == pytest.approx(0.0, abs=1e-9)

    def test_arclength_derivatives_match_fd(self, asym_curve):
        h = 1e-5
        for phi in [0.3, 1.7, 4.0]:
            r, rp, rpp, drds, d2rds2 = asym_curve.radius_derivatives(phi)
            s0 = asym_curve.arclength(phi)
            rfun = lambda s: asym_curve.radius(asym_curve.angle_of_arclength(s))
            fd1 = (rfun(s0 + h) - rfun(s0 - h)) / (2 * h)
            fd2 = (rfun(s0 + h) - 2 * rfun(s0) + rfun(s0 - h)) / h**2
            assert drds == pytest.approx(fd1, abs=1e-7)
            assert d2rds2 == pytest.approx(fd2, abs=1e-4)


class TestArclength:
    def test_circle_identity(self, circle):
        assert circle.arclength(1.234) == pytest.approx(1.234, abs=1e-14)

    def test_total_length_is_mean_radius(self):
        curve = build_from_curvature(TrigPoly(1.0, [0.0, 0.3]))
        assert curve.arclength(TWO_PI) == pytest.approx(TWO_PI, abs=1e-12)

    def test_inverse_roundtrip(self, ell15):
        phi = np.linspace(0.0, TWO_PI, 101)
        back = ell15.angle_of_arclength(ell15.arclength(phi))
        assert np.max(np.abs(back - phi)) < 1e-12


class TestBuildFromParametric:
    def test_ellipse_radius_closed_form(self):
        a, b = 2.0, 1.0
        curve = ellipse(a, b)
        t = np.linspace(0, TWO_PI, 33)
        phi = np.arctan2(b * np.cos(t), -a * np.sin(t))
        expected = (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5 / (a * b)
        assert np.max(np.abs(curve.radius(phi) - expected)) < 1e-9

    def test_ellipse_vertex_radius(self):
        curve = ellipse(2.0, 1.0)
        # point (2, 0) has tangent angle pi/2 and R = b^2/a
        assert curve.radius(math.pi / 2) == pytest.approx(0.5, abs=1e-10)
        assert np.allclose(curve.position(math.pi / 2), [2.0, 0.0], atol=1e-10)

    def test_fig2_accepted(self, fig2):
        assert fig2.closure_residual() < 1e-10 * fig2.total_arclength
        # anchor points from the parametric formula
        phi_top = math.pi  # t = pi/2: point (0, 3), tangent (-1, 0)
        assert np.allclose(fig2.position(phi_top), [0.0, 3.0], atol=1e-9)
        assert np.allclose(fig2.position(0.0), [0.0, 1.0], atol=1e-9)

    def test_degenerate_rejected(self):
        line = ParametricSpec(
            x=lambda t: np.asarray(t, dtype=float),
            y=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            dx=lambda t: np.ones_like(np.asarray(t, dtype=float)),
            dy=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            ddx=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            ddy=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        )
        with pytest.raises(NonConvex):
            build_from_parametric(line)

    def test_clockwise_orientation_handled(self):
        a, b = 1.5, 1.0
        cw = ParametricSpec(
            x=lambda t: a * np.cos(t), y=lambda t: -b * np.sin(t),
            dx=lambda t: -a * np.sin(t), dy=lambda t: -b * np.cos(t),
            ddx=lambda t: -a * np.cos(t), ddy=lambda t: b * np.sin(t),
        )
        curve = build_from_parametric(cw)
        assert curve.total_arclength == pytest.approx(ellipse(a, b).total_arclength,
                                                      abs=1e-9)


class TestInvariants:
    def test_closure_everywhere(self, circle, ell15, ell21, fig2):
        for curve in (circle, ell15, ell21, fig2):
            assert curve.closure_residual() < 1e-10 * curve.total_arclength

    def test_frame_consistency(self, ell15, fig2, asym_curve):
        h = 1e-6
        phi = np.linspace(0.3, TWO_PI, 23)
        for curve in (ell15, fig2, asym_curve):
            fd = (curve.position(phi + h) - curve.position(phi - h)) / (2 * h)
            expected = curve.radius(phi)[:, None] * curve.tangent(phi)
            scale = np.max(np.abs(expected))
            assert np.max(np.abs(fd - expected)) < 1e-8 * scale

    def test_parametric_roundtrip_recovers_profile(self):
        rng = np.random.default_rng(11)
        base = random_profile_curve(rng)
        spec = ParametricSpec(
            x=lambda t: base.position(t)[..., 0],
            y=lambda t: base.position(t)[..., 1],
            dx=lambda t: base.radius(t) * np.cos(t),
            dy=lambda t: base.radius(t) * np.sin(t),
            ddx=lambda t: (base.radius_derivatives(t)[1] * np.cos(t)
                           - base.radius(t) * np.sin(t)),
            ddy=lambda t: (base.radius_derivatives(t)[1] * np.sin(t)
                           + base.radius(t) * np.cos(t)),
        )
        rebuilt = build_from_parametric(spec)
        phi = np.linspace(0, TWO_PI, 257)
        assert np.max(np.abs(rebuilt.radius(phi) - base.radius(phi))) < 1e-8

    def test_xyrs_consistency(self, fig2):
        phi = np.linspace(0, TWO_PI, 40)
        x, y, r, s = fig2.xyrs(phi)
        assert np.allclose(np.stack([x, y], axis=-1), fig2.position(phi), atol=1e-12)
        assert np.allclose(r, fig2.radius(phi), atol=1e-12)
        assert np.allclose(s, fig2.arclength(phi), atol=1e-12)
