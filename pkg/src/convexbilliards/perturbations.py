"""Normal perturbations beta = alpha + lambda * eta of a convex curve.

The displacement field lambda is a trigonometric polynomial, so its
derivatives through order 4 are exact and jet conditions at the diameter
endpoints are linear constraints on the coefficients.  A perturbed curve is
rebuilt as a first-class ConvexCurve (reparametrized by its own tangent
angle through the transfer map h) so that every downstream analysis treats
it uniformly.
"""

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .curves import ConvexCurve
from .diameters import (Diameter, find_diameters, is_resonant,
                        resonance_distance, rotation_angle, RESONANT_ANGLES)
from .errors import (Degenerate, Inadmissible, MarginUnreachable, NotDiffeo,
                     NotElliptic, NotResonant, ResamplingFailure)
from .trigpoly import TrigPoly, adaptive_fit

TWO_PI = 2.0 * math.pi


class PerturbationField:
    """Scalar normal displacement lambda(phi), 2pi-periodic, derivatives exact."""

    def __init__(self, poly):
        self.poly = poly if isinstance(poly, TrigPoly) else TrigPoly(poly)
        self._derivs = [self.poly]
        for _ in range(4):
            self._derivs.append(self._derivs[-1].derivative())

    @classmethod
    def from_coeffs(cls, a0=0.0, ak=(), bk=()):
        return cls(TrigPoly(a0, ak, bk))

    @classmethod
    def zero(cls):
        return cls(TrigPoly(0.0))

    def __call__(self, phi, order=0):
        return self._derivs[order](phi)

    def derivative_poly(self, order):
        return self._derivs[order]

    def c2_norm(self):
        """Certified upper bound for max{|l|, |l'|, |l''|}, within 1% overshoot."""
        return max(self._derivs[k].max_abs(rel_slack=0.01) for k in range(3))

    def is_zero(self):
        return self.poly.a0 == 0.0 and not np.any(self.poly.ak) and not np.any(self.poly.bk)

    def contact_at(self, phi0=0.0):
        d = self._derivs
        return ContactData(
            lam0=float(d[0](phi0)), lampi=float(d[0](phi0 + math.pi)),
            lam0pp=float(d[2](phi0)), lampipp=float(d[2](phi0 + math.pi)),
            lam0q=float(d[4](phi0)), lampiq=float(d[4](phi0 + math.pi)),
        )

    def __repr__(self):
        return f"PerturbationField(degree={self.poly.degree})"


@dataclass(frozen=True)
class ContactData:
    """Jet data of lambda at the two endpoints of a diameter."""

    lam0: float = 0.0
    lampi: float = 0.0
    lam0pp: float = 0.0
    lampipp: float = 0.0
    lam0q: float = 0.0
    lampiq: float = 0.0


def _ratio_derivs(num, den):
    """Pointwise (g, g', g'') callables for g = num/den of trig polynomials."""
    num1, den1 = num.derivative(), den.derivative()
    num2, den2 = num1.derivative(), den1.derivative()

    def g(phi):
        return num(phi) / den(phi)

    def gp(phi):
        n, d = num(phi), den(phi)
        return (num1(phi) * d - n * den1(phi)) / d**2

    def gpp(phi):
        n, d = num(phi), den(phi)
        n1, d1 = num1(phi), den1(phi)
        return (num2(phi) * d - n * den2(phi)) / d**2 - 2.0 * d1 * (n1 * d - n * d1) / d**3

    return g, gp, gpp


class _HMap:
    """Tangent-angle transfer h(phi) = phi + arctan(lambda'/(R - lambda))."""

    def __init__(self, base, field):
        self._g, self._gp, self._gpp = _ratio_derivs(
            field.derivative_poly(1), base.profile.poly - field.poly
        )

    def __call__(self, phi):
        return np.asarray(phi, dtype=float) + np.arctan(self._g(phi))

    def deriv(self, phi):
        g = self._g(phi)
        return 1.0 + self._gp(phi) / (1.0 + g**2)

    def deriv2(self, phi):
        g = self._g(phi)
        gp = self._gp(phi)
        return (self._gpp(phi) * (1.0 + g**2) - 2.0 * g * gp**2) / (1.0 + g**2) ** 2

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        phi = np.atleast_1d(y).astype(float).copy()
        target = np.atleast_1d(y)
        for _ in range(100):
            step = (self(phi) - target) / self.deriv(phi)
            phi -= step
            if np.max(np.abs(step)) < 1e-14:
                break
        return np.float64(phi[0]) if scalar else phi


def c2_norm(field):
    """Certified C^2 norm max{|l|, |l'|, |l''|} of a perturbation field."""
    return field.c2_norm()


def admissible(base, field):
    """True iff R - lambda > 0 and the perturbed-curvature denominator stays positive."""
    r = base.profile.poly
    lam = field.poly
    lam1 = field.derivative_poly(1)
    lam2 = field.derivative_poly(2)
    rm = r - lam
    if not rm.is_positive():
        return False
    den = rm * (rm + lam2) - lam1 * (r.derivative() - 2.0 * lam1)
    return den.is_positive()


def h_map(base, field, phi):
    """h(phi) for the perturbation; raises NotDiffeo when h' is not positive."""
    h = _make_h(base, field)
    return h(phi)


def h_inverse(base, field, y):
    h = _make_h(base, field)
    return h.inverse(y)


def _make_h(base, field, n0=4096):
    h = _HMap(base, field)
    n = max(n0, 16 * (base.profile.degree + field.poly.degree + 4))
    grid = np.linspace(0.0, TWO_PI, n, endpoint=False)
    hp = h.deriv(grid)
    if np.min(hp) <= 0.0:
        raise NotDiffeo("dh/dphi <= 0: perturbation too large in C^2")
    slack = np.max(np.abs(h.deriv2(grid))) * math.pi / n
    if np.min(hp) <= slack:
        n *= 8
        grid = np.linspace(0.0, TWO_PI, n, endpoint=False)
        hp = h.deriv(grid)
        if np.min(hp) <= np.max(np.abs(h.deriv2(grid))) * math.pi / n:
            raise NotDiffeo("cannot certify dh/dphi > 0")
    return h


def perturbed_radius(base, field, phi):
    """Curvature radius of beta at parameter phi (not beta's tangent angle)."""
    r = base.radius(phi)
    rp = base.profile.poly.derivative()(phi)
    lam = field(phi, 0)
    lam1 = field(phi, 1)
    lam2 = field(phi, 2)
    num = ((r - lam) ** 2 + lam1**2) ** 1.5
    den = (r - lam) * (r - lam + lam2) - lam1 * (rp - 2.0 * lam1)
    return num / den


def beta_position(base, field, phi):
    return base.position(phi) + field(phi, 0)[..., None] * base.normal(phi)


@dataclass
class PerturbedCurve:
    base: ConvexCurve
    field: PerturbationField
    curve: ConvexCurve  # reparametrized by its own tangent angle
    hmap: _HMap

    def h(self, phi):
        return self.hmap(phi)

    def h_inv(self, y):
        return self.hmap.inverse(y)


def apply(base, field, fit_tol=1e-12, max_degree=2048, position_tol=1e-10):
    """Build the perturbed curve beta = alpha + lambda eta as a ConvexCurve.

    The new curvature profile is R_beta -> fitted against beta's own tangent
    angle y = h(phi); the reconstruction is verified pointwise against the
    exact beta before returning.
    """
    if not admissible(base, field):
        raise Inadmissible("perturbation destroys regularity or strict convexity")
    if field.is_zero():
        return PerturbedCurve(base, field, base, _make_h(base, field))
    h = _make_h(base, field)
    n = max(8192, 16 * (base.profile.degree + field.poly.degree + 4))
    phi = np.linspace(0.0, TWO_PI, n, endpoint=False)
    y = h(phi)
    rb = perturbed_radius(base, field, phi)
    scale = float(np.median(rb))
    fit = adaptive_fit(y % TWO_PI, rb, fit_tol * scale, max_degree)
    if fit is None:
        raise ResamplingFailure("perturbed-curvature fit failed to start")
    poly, resid = fit
    if resid > max(fit_tol * scale, 1e-13 * scale):
        raise ResamplingFailure(
            f"perturbed-curvature fit residual {resid:.3e} above tolerance")
    if poly.degree >= 1:
        if max(abs(poly.ak[0]), abs(poly.bk[0])) > max(1e-9 * poly.a0, 1e3 * resid):
            raise ResamplingFailure("perturbed profile has harmonic-1 content")
        ak, bk = poly.ak.copy(), poly.bk.copy()
        ak[0] = bk[0] = 0.0
        poly = TrigPoly(poly.a0, ak, bk)
    phi_star = h.inverse(0.0)
    anchor = beta_position(base, field, float(phi_star))
    curve0 = ConvexCurve(poly, (0.0, 0.0))
    curve = ConvexCurve(poly, anchor - curve0.position(0.0))

    check = np.linalg.norm(curve.position(y) - beta_position(base, field, phi), axis=-1)
    err = float(np.max(check))
    if err > max(position_tol, 1e4 * resid):
        raise ResamplingFailure(
            f"perturbed curve reconstruction error {err:.3e} above tolerance")
    return PerturbedCurve(base, field, curve, h)


def antipodal_deviation(base, field, n=4096):
    """Sup norms of (f - I_pi, f' - 1, f'') for f(phi) = h^-1(h(phi) + pi)."""
    h = _make_h(base, field)
    phi = np.linspace(0.0, TWO_PI, n, endpoint=False)
    f = h.inverse(h(phi) + math.pi)
    d0 = float(np.max(np.abs(f - phi - math.pi)))
    hp_phi = h.deriv(phi)
    hp_f = h.deriv(f)
    fp = hp_phi / hp_f
    d1 = float(np.max(np.abs(fp - 1.0)))
    fpp = (h.deriv2(phi) * hp_f - hp_phi * h.deriv2(f) * fp) / hp_f**2
    d2 = float(np.max(np.abs(fpp)))
    return d0, d1, d2


# -- resonance machinery -------------------------------------------------------

def resonance_gap_function(diameter, contact):
    """cos(gamma) of the perturbed diameter as a function of the contact data.

    Evaluates the closed-form expression in (lam0, lampi, lam0'', lampi'')
    built from the perturbed chord length and endpoint curvature radii.
    """
    L0, R0, Rpi = diameter.L0, diameter.R0, diameter.Rpi
    l0 = L0 - contact.lam0 - contact.lampi
    den0 = R0 - contact.lam0 + contact.lam0pp
    denpi = Rpi - contact.lampi + contact.lampipp
    if den0 <= 0 or denpi <= 0:
        raise Degenerate("curvature denominator vanishes for this contact data")
    r0 = (R0 - contact.lam0) ** 2 / den0
    rpi = (Rpi - contact.lampi) ** 2 / denpi
    if r0 <= 0 or rpi <= 0:
        raise Degenerate("perturbed curvature radius not positive")
    return 2.0 * (l0 - r0) * (l0 - rpi) / (r0 * rpi) - 1.0


def resonance_gap_partials(diameter):
    """Exact gradient of the gap function at zero contact:
    (d/dlam0, d/dlampi, d/dlam0'', d/dlampi'')."""
    L0, R0, Rpi = diameter.L0, diameter.R0, diameter.Rpi
    return np.array([
        2.0 * (L0 - R0) * (L0 - R0 - Rpi) / (R0**2 * Rpi),
        2.0 * (L0 - Rpi) * (L0 - R0 - Rpi) / (Rpi**2 * R0),
        2.0 * (L0 - Rpi) * L0 / (R0**2 * Rpi),
        2.0 * (L0 - R0) * L0 / (Rpi**2 * R0),
    ])


def third_order_contact(a4_0, a4_pi, phi0=0.0):
    """Field with zero 3-jet at phi0 and phi0+pi and prescribed 4th derivatives.

    lambda = (A/24) sin^4(psi) (1+cos psi)/2 + (B/24) sin^4(psi) (1-cos psi)/2
    in the shifted angle psi = phi - phi0; the two basis functions decouple
    the quartic values at the two endpoints exactly.
    """
    sin4 = TrigPoly(3.0 / 8.0, [0.0, -0.5, 0.0, 0.125])
    plus = TrigPoly(0.5, [0.5])
    minus = TrigPoly(0.5, [-0.5])
    poly = (a4_0 / 24.0) * (sin4 * plus) + (a4_pi / 24.0) * (sin4 * minus)
    return PerturbationField(poly.shifted(-phi0))


def _candidate_shapes(phi0):
    """Unit-C2-norm fields with lambda'(phi0) = lambda'(phi0+pi) = 0.

    Returns (field, contact-response) pairs; responses are in the
    (lam0, lampi, lam0'', lampi'') coordinates of the gap function.
    """
    out = []
    for r in (0.0, 1.0, 2.0, 3.0, 4.0, 6.0):
        norm = max(r + 1.0, 4.0)
        poly = TrigPoly(r / norm, [0.0, 1.0 / norm]).shifted(-phi0)
        resp = np.array([(r + 1.0) / norm, (r + 1.0) / norm, -4.0 / norm, -4.0 / norm])
        out.append((poly, resp))
        if r > 0:
            poly = TrigPoly(-r / norm, [0.0, -1.0 / norm]).shifted(-phi0)
            out.append((poly, -resp))
    # antisymmetric in psi -> opposite response at the two endpoints
    out.append((TrigPoly(0.0, [1.0]).shifted(-phi0), np.array([1.0, -1.0, -1.0, 1.0])))
    poly9 = TrigPoly(0.0, [0.0, 0.0, 1.0 / 9.0]).shifted(-phi0)
    out.append((poly9, np.array([1.0 / 9.0, -1.0 / 9.0, -1.0, 1.0])))
    return out


def _nearest_diameter(diams, phi0, window=0.1):
    best = None
    for d in diams:
        dist = min(abs(d.phi0 - phi0) % math.pi, math.pi - abs(d.phi0 - phi0) % math.pi)
        if dist <= window and (best is None or dist < best[0]):
            best = (dist, d)
    return None if best is None else best[1]


def break_resonance(base, diameter, margin, budget=None, resonance_tol=1e-6,
                    pad=1.06):
    """Small field moving a resonant elliptic diameter's gamma off the
    resonance set by at least `margin`, keeping the diameter at phi0.

    The first step follows the analytic partials of the gap function along
    the most norm-efficient candidate shape (greedy over a small dictionary
    of fields with lambda' = 0 at both endpoints); the amplitude is then
    corrected against the measured end-to-end response, and the final curve
    is re-analyzed to certify the margin.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if diameter.stability.kind != "elliptic":
        raise NotElliptic("break_resonance needs an elliptic diameter")
    gamma = diameter.gamma
    flag, _ = is_resonant(gamma, resonance_tol)
    if not flag:
        raise NotResonant(f"gamma={gamma:.9f} is not resonant within {resonance_tol}")
    if margin == 0:
        return PerturbationField.zero()
    if budget is None:
        budget = margin
    gamma_res = min(RESONANT_ANGLES.values(), key=lambda ang: abs(gamma - ang))
    grad = resonance_gap_partials(diameter)
    shapes = _candidate_shapes(diameter.phi0)

    for direction in (+1.0, -1.0):
        gamma_target = gamma_res + direction * pad * margin
        if not (1e-3 < gamma_target < math.pi - 1e-3):
            continue
        dcos = math.cos(gamma_target) - math.cos(gamma)
        best = None
        for poly, resp in shapes:
            eff = float(grad @ resp)
            if abs(eff) < 1e-14:
                continue
            amp = dcos / eff
            if best is None or abs(amp) < abs(best[0]):
                best = (amp, poly)
        if best is None:
            continue
        amp, poly = best
        for _ in range(4):
            field = PerturbationField(amp * poly)
            if field.c2_norm() > budget * (1.0 + 1e-9):
                break
            try:
                perturbed = apply(base, field)
                diams = find_diameters(perturbed.curve)
            except (Inadmissible, NotDiffeo, ResamplingFailure):
                break
            near = _nearest_diameter(diams, diameter.phi0)
            if near is None or near.stability.kind != "elliptic":
                break
            dist = resonance_distance(near.gamma)
            if dist >= margin:
                return field
            # correct the amplitude against the measured response
            measured = math.cos(near.gamma) - math.cos(gamma)
            if abs(measured) < 1e-15:
                break
            amp *= dcos / measured
    raise MarginUnreachable(
        f"could not certify margin {margin} within |lambda|_2 budget {budget}")


@dataclass
class TwistCertificate:
    """Outcome of ensure_twist: final curve plus the verification data."""

    perturbed: PerturbedCurve
    stages: list
    diameter: Diameter
    gamma: float
    resonance_dist: float
    tau1: float
    tau1_tol: float
    case: str


def ensure_twist(base, margin=1e-3, resonance_tol=1e-6, jet_kwargs=None):
    """Certify (perturbing if needed) a non-resonant elliptic diameter with
    nonzero twist coefficient.

    Case analysis: (i) already non-resonant with |tau1| above tolerance ->
    zero field; (ii) non-resonant but tau1 ~ 0 -> third-order-contact field
    sized from the closed-form tau1 slope; (iii) resonant -> break the
    resonance first, then re-check as in (i)/(ii).
    """
    from . import normalform  # local import; normalform does not import us

    diams = find_diameters(base)
    elliptic = [d for d in diams if d.stability.kind == "elliptic"]
    if not elliptic:
        raise NotElliptic("curve has no elliptic diameter")
    diam = elliptic[0]
    stages = []
    cur = PerturbedCurve(base, PerturbationField.zero(), base,
                         _make_h(base, PerturbationField.zero()))
    case = "i"

    flag, _ = is_resonant(diam.gamma, resonance_tol)
    if flag:
        case = "iii"
        f1 = break_resonance(base, diam, margin, resonance_tol=resonance_tol)
        cur = apply(base, f1)
        stages.append(("break_resonance", f1))
        diam = _nearest_diameter(find_diameters(cur.curve), diam.phi0)
        if diam is None or diam.stability.kind != "elliptic":
            raise MarginUnreachable("resonance breaking lost the elliptic diameter")

    def twist_of(curve, d):
        jet = normalform.jet3_t2(curve, d, **(jet_kwargs or {}))
        coeffs = normalform.complexify(jet)
        res = normalform.tau1(coeffs)
        return res, coeffs

    res, coeffs = twist_of(cur.curve, diam)
    tol_eff = 1e-8 * max(1.0, abs(coeffs.c21))
    if abs(res.tau1) <= tol_eff:
        case = "ii" if case == "i" else "iii+ii"
        slope = normalform.tau1_contact_slope(diam.L0, diam.R0, diam.Rpi)
        a4 = 10.0 * tol_eff / slope
        f2 = third_order_contact(a4, 0.0, phi0=diam.phi0)
        cur = apply(cur.curve, f2)
        stages.append(("third_order_contact", f2))
        diam = _nearest_diameter(find_diameters(cur.curve), diam.phi0)
        if diam is None or diam.stability.kind != "elliptic":
            raise MarginUnreachable("contact perturbation lost the elliptic diameter")
        res, coeffs = twist_of(cur.curve, diam)
        if abs(res.tau1) <= tol_eff:
            raise MarginUnreachable("twist coefficient still below tolerance")

    flag, _ = is_resonant(diam.gamma, resonance_tol)
    if flag:
        raise MarginUnreachable("final diameter is resonant")
    return TwistCertificate(
        perturbed=cur,
        stages=stages,
        diameter=diam,
        gamma=diam.gamma,
        resonance_dist=resonance_distance(diam.gamma),
        tau1=res.tau1,
        tau1_tol=tol_eff,
        case=case,
    )
