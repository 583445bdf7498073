"""Diameters (2-periodic orbits): location, stability, rotation angle, resonances.

A diameter is a critical point of the antipodal chord length
l(phi) = |alpha(phi) - alpha(phi+pi)|; equivalently the chord is parallel
to the normal.  Stability is decided by the signs of
d_sum = L0 - (R0 + Rpi) and d_prod = (L0 - R0)(L0 - Rpi), and for elliptic
diameters the rotation angle comes from
cos(gamma) = 2 (L0 - R0)(L0 - Rpi) / (R0 Rpi) - 1.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import _tangent_from_geometry
from .errors import ContinuumFlag, NotElliptic

TWO_PI = 2.0 * math.pi

RESONANT_ANGLES = {3: 2.0 * math.pi / 3.0, 4: 0.5 * math.pi}


@dataclass(frozen=True)
class StabilityClass:
    kind: str  # "elliptic" | "hyperbolic" | "parabolic"
    d_sum: float  # L0 - (R0 + Rpi)
    d_prod: float  # (L0 - R0)(L0 - Rpi)


@dataclass(frozen=True)
class Diameter:
    phi0: float  # representative angle in [0, pi)
    L0: float
    R0: float
    Rpi: float
    lpp: float  # closed-form second derivative of l at phi0
    stability: StabilityClass
    gamma: Optional[float] = None  # rotation angle in (0, pi), elliptic only

    @property
    def kind(self):
        return self.stability.kind


def chord_function(curve, phi):
    """Antipodal chord length l(phi) and its exact derivative dl/dphi."""
    phi = np.asarray(phi, dtype=float)
    delta = curve.position(phi) - curve.position(phi + math.pi)
    ell = np.linalg.norm(delta, axis=-1)
    rsum = curve.radius(phi) + curve.radius(phi + math.pi)
    tau = curve.tangent(phi)
    dl = rsum * np.sum(tau * delta, axis=-1) / ell
    if phi.ndim == 0:
        return float(ell), float(dl)
    return ell, dl


def _chord_d2(curve, phi):
    """Second derivative of l, valid at any phi (not only at diameters)."""
    delta = curve.position(phi) - curve.position(phi + math.pi)
    ell = float(np.linalg.norm(delta))
    r0 = float(curve.radius(phi))
    rpi = float(curve.radius(phi + math.pi))
    rp0 = float(curve.radius_derivatives(phi)[1])
    rppi = float(curve.radius_derivatives(phi + math.pi)[1])
    tau = curve.tangent(phi)
    eta = curve.normal(phi)
    u = float(np.dot(tau, delta))
    up = float(np.dot(eta, delta)) + (r0 + rpi)
    lp = (r0 + rpi) * u / ell
    return ((rp0 + rppi) * u + (r0 + rpi) * up) / ell - (r0 + rpi) * u * lp / ell**2


def classify(L0, R0, Rpi, tol=1e-9):
    """Stability trichotomy from the discriminants, with a parabolic band.

    Tolerances are relative: tol*L0 on the sum discriminant, tol*L0^2 on
    the product.
    """
    d_sum = L0 - (R0 + Rpi)
    d_prod = (L0 - R0) * (L0 - Rpi)
    band_sum = tol * L0
    band_prod = tol * L0**2
    if abs(d_sum) < band_sum or (d_sum < 0 and abs(d_prod) < band_prod):
        kind = "parabolic"
    elif d_sum > 0 or d_prod < 0:
        kind = "hyperbolic"
    else:
        kind = "elliptic"
    return StabilityClass(kind, d_sum, d_prod)


def second_derivative_at(diameter):
    """Closed-form l''(phi0) = -(R0+Rpi)(L0-(R0+Rpi))/L0."""
    rsum = diameter.R0 + diameter.Rpi
    return -rsum * (diameter.L0 - rsum) / diameter.L0


def dt2_matrix(diameter):
    """DT^2 at the diameter in (s, p) coordinates, from the two closed-form
    per-bounce matrices.  Same trace and eigenvalues as the (phi, theta)
    matrix product; entrywise it matches the product of tangent maps along
    the orbit."""
    b1 = _tangent_from_geometry(diameter.L0, diameter.R0, diameter.Rpi, 1.0, 1.0)
    b2 = _tangent_from_geometry(diameter.L0, diameter.Rpi, diameter.R0, 1.0, 1.0)
    return b2 @ b1


def rotation_angle(diameter):
    """gamma in (0, pi) with cos(gamma) given by the eigenvalue formula."""
    if diameter.stability.kind != "elliptic":
        raise NotElliptic(f"diameter at phi0={diameter.phi0:.6g} is {diameter.kind}")
    cosg = 2.0 * diameter.stability.d_prod / (diameter.R0 * diameter.Rpi) - 1.0
    return math.acos(min(1.0, max(-1.0, cosg)))


def is_resonant(gamma, tol=1e-6):
    """Low-order resonance test: gamma within tol of pi/2 (j=4) or 2pi/3 (j=3)."""
    for j, ang in sorted(RESONANT_ANGLES.items()):
        if abs(gamma - ang) < tol:
            return True, j
    return False, None


def resonance_distance(gamma):
    return min(abs(gamma - ang) for ang in RESONANT_ANGLES.values())


def _make_diameter(curve, phi0, tol):
    phi0 = phi0 % math.pi
    ell, _ = chord_function(curve, phi0)
    r0 = float(curve.radius(phi0))
    rpi = float(curve.radius(phi0 + math.pi))
    stab = classify(ell, r0, rpi, tol)
    gamma = None
    if stab.kind == "elliptic":
        cosg = 2.0 * stab.d_prod / (r0 * rpi) - 1.0
        gamma = math.acos(min(1.0, max(-1.0, cosg)))
    lpp = -(r0 + rpi) * (ell - (r0 + rpi)) / ell
    return Diameter(phi0=float(phi0), L0=float(ell), R0=r0, Rpi=rpi, lpp=lpp,
                    stability=stab, gamma=gamma)


def find_diameters(curve, grid=512, tol=1e-9, newton_tol=1e-12):
    """All diameters on [0, pi), by sign-change bracketing of dl/dphi plus
    guarded Newton with the exact second derivative.

    Raises ContinuumFlag when dl/dphi vanishes on the whole scan grid
    (circle-like curve: every direction is a diameter).
    """
    if grid < 64:
        raise ValueError("scan grid must have at least 64 points")
    phis = np.linspace(0.0, math.pi, grid, endpoint=False)
    ell, dl = chord_function(curve, phis)
    if np.max(np.abs(dl)) < 1e-10 * np.max(ell):
        raise ContinuumFlag("dl/dphi vanishes identically: no isolated diameters")

    h = math.pi / grid
    roots = []
    for i in range(grid):
        g0 = dl[i]
        g1 = dl[(i + 1) % grid]
        if g0 == 0.0:
            roots.append(phis[i])
            continue
        if g0 * g1 < 0.0:
            lo, hi = phis[i], phis[i] + h
            glo = g0
            x = 0.5 * (lo + hi)
            for _ in range(100):
                _, gx = chord_function(curve, x)
                if np.sign(gx) == np.sign(glo):
                    lo = x
                else:
                    hi = x
                d2 = _chord_d2(curve, x)
                xn = x - gx / d2 if d2 != 0.0 else 0.5 * (lo + hi)
                if not (lo < xn < hi):
                    xn = 0.5 * (lo + hi)
                if abs(xn - x) < newton_tol:
                    x = xn
                    break
                x = xn
            roots.append(x)

    # merge duplicates (mod pi); snap representatives just below pi to 0
    reps = []
    for q in roots:
        r = q % math.pi
        if r > math.pi - 1e-9:
            r = 0.0
        reps.append(r)
    merged = []
    for r in sorted(reps):
        if not merged or min(abs(r - merged[-1]), math.pi - abs(r - merged[-1])) > 1e-8:
            merged.append(r)
    if len(merged) > 1 and math.pi - abs(merged[-1] - merged[0]) < 1e-8:
        merged.pop()
    return [_make_diameter(curve, r, tol) for r in merged]
