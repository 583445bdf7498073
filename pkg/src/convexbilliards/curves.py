"""Strictly convex closed curves parametrized by tangent angle.

A curve is stored through its curvature-radius profile R(phi) as a
trigonometric polynomial. Positions come from the exact antiderivative of
R(phi) (cos phi, sin phi): products of trig polynomials integrate in closed
form, so alpha(phi), the frame and all curvature derivatives are available
at machine precision.  Closure of the curve is exactly the vanishing of the
harmonic-1 coefficients of R.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvex, NotClosed, ResamplingFailure
from .trigpoly import TrigPoly, adaptive_fit

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CurvatureProfile:
    """Curvature radius R(phi) as a trigonometric polynomial."""

    poly: TrigPoly

    @classmethod
    def from_coeffs(cls, a0, ak=(), bk=()):
        return cls(TrigPoly(a0, ak, bk))

    @property
    def degree(self):
        return self.poly.degree

    def closure_defect(self):
        """Size of the harmonic-1 coefficients (must vanish for a closed curve)."""
        if self.degree < 1:
            return 0.0
        return float(max(abs(self.poly.ak[0]), abs(self.poly.bk[0])))


class ParametricSpec:
    """Closed-form parametric curve (x(t), y(t)) on [0, 2pi] with two derivatives."""

    def __init__(self, x, y, dx, dy, ddx, ddy, name="parametric"):
        self.x, self.y = x, y
        self.dx, self.dy = dx, dy
        self.ddx, self.ddy = ddx, ddy
        self.name = name

    def point(self, t):
        return np.stack([self.x(t), self.y(t)], axis=-1)

    def reversed(self):
        """Orientation flip t -> 2pi - t."""
        return ParametricSpec(
            x=lambda t: self.x(TWO_PI - t),
            y=lambda t: self.y(TWO_PI - t),
            dx=lambda t: -self.dx(TWO_PI - t),
            dy=lambda t: -self.dy(TWO_PI - t),
            ddx=lambda t: self.ddx(TWO_PI - t),
            ddy=lambda t: self.ddy(TWO_PI - t),
            name=self.name,
        )


def ellipse_spec(a, b):
    if a <= 0 or b <= 0:
        raise ValueError("ellipse half-axes must be positive")
    return ParametricSpec(
        x=lambda t: a * np.cos(t),
        y=lambda t: b * np.sin(t),
        dx=lambda t: -a * np.sin(t),
        dy=lambda t: b * np.cos(t),
        ddx=lambda t: -a * np.cos(t),
        ddy=lambda t: -b * np.sin(t),
        name=f"ellipse({a},{b})",
    )


def fig2_spec():
    """x(t) = cos t, y(t) = 3/(2 - sin t): convex oval with two hyperbolic diameters."""

    def y(t):
        return 3.0 / (2.0 - np.sin(t))

    def dy(t):
        return 3.0 * np.cos(t) / (2.0 - np.sin(t)) ** 2

    def ddy(t):
        s = np.sin(t)
        return 3.0 * (-s * (2.0 - s) + 2.0 * np.cos(t) ** 2) / (2.0 - s) ** 3

    return ParametricSpec(
        x=lambda t: np.cos(t),
        y=y,
        dx=lambda t: -np.sin(t),
        dy=dy,
        ddx=lambda t: -np.cos(t),
        ddy=ddy,
        name="fig2",
    )


class ConvexCurve:
    """Immutable strictly convex closed curve, tangent-angle parametrized.

    All evaluators accept scalars or numpy arrays of angles; angles are not
    reduced internally, so arclength stays monotone on unreduced inputs.
    """

    def __init__(self, profile, basepoint=(0.0, 0.0)):
        poly = profile.poly if isinstance(profile, CurvatureProfile) else profile
        self.profile = CurvatureProfile(poly)
        self.basepoint = np.asarray(basepoint, dtype=float)
        self._R = poly
        self._dR = poly.derivative()
        self._d2R = self._dR.derivative()
        # exact integrands for position: R cos phi and R sin phi
        self._fx = poly * TrigPoly(0.0, [1.0], [0.0])
        self._fy = poly * TrigPoly(0.0, [0.0], [1.0])
        self.total_arclength = float(TWO_PI * poly.a0)
        self._rmin_bound = None
        # padded coefficient tables for the fused position/radius evaluator
        deg = max(self._fx.degree, self._fy.degree, poly.degree, 1)
        self._deg = deg
        self._k = np.arange(1, deg + 1)

        def padded(p):
            ak = np.zeros(deg)
            bk = np.zeros(deg)
            ak[: p.degree] = p.ak
            bk[: p.degree] = p.bk
            return ak, bk

        self._fx_ak, self._fx_bk = padded(self._fx)
        self._fy_ak, self._fy_bk = padded(self._fy)
        self._r_ak, self._r_bk = padded(poly)
        self._fx_aki = self._fx_ak / self._k
        self._fx_bki = self._fx_bk / self._k
        self._fy_aki = self._fy_ak / self._k
        self._fy_bki = self._fy_bk / self._k
        # fused evaluation tables: columns (x, y, R, s) against sin / cos
        self._sin_tab = np.column_stack([
            self._fx_aki, self._fy_aki, self._r_bk, self._r_ak / self._k])
        self._cos_tab = np.column_stack([
            -self._fx_bki, -self._fy_bki, self._r_ak, -self._r_bk / self._k])
        self._const_tab = np.array([
            float(np.sum(self._fx_bki)) + self.basepoint[0],
            float(np.sum(self._fy_bki)) + self.basepoint[1],
            poly.a0,
            float(np.sum(self._r_bk / self._k)),
        ])
        self._lin_tab = np.array([self._fx.a0, self._fy.a0, 0.0, poly.a0])

    # -- evaluation ----------------------------------------------------------

    def radius(self, phi):
        return self._R(phi)

    def position(self, phi):
        x = self._fx.cumulative(phi)
        y = self._fy.cumulative(phi)
        return self.basepoint + np.stack([x, y], axis=-1)

    def xyrs(self, phi):
        """Fused evaluation (x, y, R, s) at phi, one trig table, two matmuls.

        This is the hot path of the impact solver: positions, curvature
        radius and arclength all come from the same cos/sin tables.
        """
        phi = np.asarray(phi, dtype=float)
        arg = np.multiply.outer(phi, self._k)
        out = np.sin(arg) @ self._sin_tab + np.cos(arg) @ self._cos_tab
        out += self._const_tab + np.multiply.outer(phi, self._lin_tab)
        return out[..., 0], out[..., 1], out[..., 2], out[..., 3]

    def position_and_radius(self, phi):
        """(alpha(phi), R(phi)); convenience wrapper over the fused evaluator."""
        x, y, r, _ = self.xyrs(phi)
        return np.stack([x, y], axis=-1), r

    def tangent(self, phi):
        phi = np.asarray(phi, dtype=float)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def normal(self, phi):
        phi = np.asarray(phi, dtype=float)
        return np.stack([-np.sin(phi), np.cos(phi)], axis=-1)

    def radius_derivatives(self, phi):
        """(R, dR/dphi, d2R/dphi2, dR/ds, d2R/ds2) at phi; ds = R dphi."""
        r = self._R(phi)
        rp = self._dR(phi)
        rpp = self._d2R(phi)
        return r, rp, rpp, rp / r, (rpp * r - rp**2) / r**3

    def arclength(self, phi):
        return self._R.cumulative(phi)

    def angle_of_arclength(self, s):
        """Inverse of the arclength map, by guarded Newton."""
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        phi = s / self._R.a0
        for _ in range(100):
            step = (self._R.cumulative(phi) - s) / self._R(phi)
            phi -= step
            if np.max(np.abs(step)) < 1e-14:
                break
        return np.float64(phi[0]) if scalar else phi

    def radius_taylor(self, phi0, order):
        return self._R.taylor(phi0, order)

    def min_radius(self):
        if self._rmin_bound is None:
            self._rmin_bound = self._R.min_bound()
        return self._rmin_bound

    def closure_residual(self):
        return float(np.linalg.norm(self.position(TWO_PI) - self.position(0.0)))

    def scaled(self, c):
        """Curve scaled about its basepoint by c > 0."""
        return ConvexCurve(TrigPoly(self._R.a0 * c, self._R.ak * c, self._R.bk * c),
                           self.basepoint)

    def rotated(self, rho):
        """Curve rotated by rho about the basepoint (profile shifts in phi)."""
        return ConvexCurve(self._R.shifted(-rho), self.basepoint)

    def __repr__(self):
        return f"ConvexCurve(degree={self.profile.degree}, L={self.total_arclength:.6g})"


def build_from_curvature(profile, basepoint=(0.0, 0.0), closure_tol=1e-8):
    """Construct a curve from its curvature-radius profile.

    Raises NonConvex if R(phi) is not certified positive, NotClosed if the
    harmonic-1 coefficients exceed `closure_tol` (relative to the mean
    radius).  Below-tolerance harmonic-1 coefficients are zeroed exactly.
    """
    poly = profile.poly if isinstance(profile, CurvatureProfile) else profile
    if poly.a0 <= 0:
        raise NonConvex("mean curvature radius must be positive")
    if poly.degree >= 1:
        defect = max(abs(poly.ak[0]), abs(poly.bk[0]))
        if defect > closure_tol * poly.a0:
            raise NotClosed(
                f"harmonic-1 coefficients {defect:.3e} exceed closure tolerance"
            )
        ak = poly.ak.copy()
        bk = poly.bk.copy()
        ak[0] = 0.0
        bk[0] = 0.0
        poly = TrigPoly(poly.a0, ak, bk)
    if not poly.is_positive():
        raise NonConvex("curvature radius is not strictly positive")
    return ConvexCurve(poly, basepoint)


def unit_circle(basepoint=(0.0, 0.0)):
    return build_from_curvature(TrigPoly(1.0), basepoint)


def build_from_parametric(spec, fit_tol=1e-10, max_degree=512, samples=8192):
    """Reparametrize a parametric curve by tangent angle.

    Computes phi(t) = atan2(y', x') unwrapped, resamples the curvature
    radius onto a trigonometric polynomial of adaptive degree, and anchors
    the basepoint so the returned curve reproduces the input points.
    """
    t = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    xp, yp = spec.dx(t), spec.dy(t)
    xpp, ypp = spec.ddx(t), spec.ddy(t)
    cross = xp * ypp - yp * xpp
    if np.all(cross < 0):
        return build_from_parametric(spec.reversed(), fit_tol, max_degree, samples)
    if np.any(cross <= 0):
        raise NonConvex("signed curvature changes sign or vanishes")
    p_start = np.array([float(spec.x(0.0)), float(spec.y(0.0))])
    p_end = np.array([float(spec.x(TWO_PI)), float(spec.y(TWO_PI))])
    speed = np.hypot(xp, yp)
    scale = float(np.median(speed)) * TWO_PI
    if np.linalg.norm(p_end - p_start) > 1e-9 * scale:
        raise NotClosed("parametric endpoints do not match")

    phi = np.unwrap(np.arctan2(yp, xp))
    if not np.all(np.diff(phi) > 0):
        raise NonConvex("tangent angle is not monotone")
    r_nodes = speed**3 / cross
    r_scale = float(np.median(r_nodes))

    fit = adaptive_fit(phi % TWO_PI, r_nodes, fit_tol * r_scale, max_degree)
    if fit is None:
        raise ResamplingFailure("curvature fit failed to start")
    poly, resid = fit
    if resid > fit_tol * r_scale:
        raise ResamplingFailure(
            f"curvature fit residual {resid:.3e} above tolerance"
        )
    if poly.degree >= 1:
        defect = max(abs(poly.ak[0]), abs(poly.bk[0]))
        if defect > max(1e-7 * poly.a0, 100.0 * resid):
            raise NotClosed("fitted profile has harmonic-1 content")
    curve0 = build_from_curvature(poly, (0.0, 0.0),
                                  closure_tol=max(1e-7, 100.0 * resid / poly.a0))
    offset = spec.point(t[0]) - curve0.position(phi[0])
    curve = ConvexCurve(curve0.profile, offset)

    check = np.linalg.norm(curve.position(phi) - spec.point(t), axis=-1)
    if float(np.max(check)) > max(1e-8 * r_scale, 1e3 * resid):
        raise ResamplingFailure("reconstructed curve does not reproduce input points")
    return curve


def ellipse(a, b, **kw):
    return build_from_parametric(ellipse_spec(a, b), **kw)


def fig2_curve(**kw):
    return build_from_parametric(fig2_spec(), **kw)


def evaluate(curve, phi):
    """(point, tangent, inward normal, R) at tangent angle phi."""
    return curve.position(phi), curve.tangent(phi), curve.normal(phi), curve.radius(phi)


def curvature_derivatives(curve, phi):
    return curve.radius_derivatives(phi)


def arclength(curve, phi):
    return curve.arclength(phi)


def angle_of_arclength(curve, s):
    return curve.angle_of_arclength(s)
