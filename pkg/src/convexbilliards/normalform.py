"""Third jet of the return map at an elliptic diameter, complex normal form
and the first twist coefficient.

Two independent jet routes: the primary one expands the boundary to high
order at the two bounce points and solves the impact/reflection conditions
order by order in truncated bivariate series; the oracle route is 5-point
central differencing of the composed map with Richardson extrapolation.

Complexification picks the eigenvector u of the linear part with
omega(u, conj(u)) = i/2 (omega = area form ds^dp, orientation chosen so the
imaginary part is positive).  That normalization makes the coordinates
"z = x + iy after a real symplectic change to rotation form", the setting
in which the twist coefficient formula
tau1 = (1/i) (c21 + 2|c20|^2 ((2e^{ig}+1)/(e^{ig}-1) + 1/(e^{3ig}-1)))
applies; the residual freedom is a phase and tau1 is checked invariant
under it.
"""

import cmath
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .diameters import Diameter, RESONANT_ANGLES
from .dynamics import (PeriodicOrbit, _impact_batch, _impact_warm,
                       _tangent_from_geometry)
from .errors import Degenerate, NotElliptic, Resonant, SeriesSolveFailure
from .series import (TPS2, arcsin_taylor, cos_taylor, sin_taylor,
                     tps2_reciprocal, tps2_substitute, u_derivative,
                     u_integrate, u_revert)

TWO_PI = 2.0 * math.pi


@dataclass
class Jet2D:
    """Taylor coefficients (through total degree 3) of T^2 at the fixed point.

    cs[a, b] / cp[a, b] multiply ds^a dp^b in the s / p output component.
    """

    cs: np.ndarray
    cp: np.ndarray
    phi0: float
    order: int = 3

    def linear(self):
        return np.array([[self.cs[1, 0], self.cs[0, 1]],
                         [self.cp[1, 0], self.cp[0, 1]]])

    @property
    def trace(self):
        return float(self.cs[1, 0] + self.cp[0, 1])


@dataclass
class ComplexNormalCoeffs:
    """Third-jet coefficients in diagonalizing complex coordinates.

    gamma is signed: it is the argument of the eigenvalue whose eigenvector
    carries the canonical orientation (omega(u, conj u) = i/2); the
    conjugate pair is implied.
    """

    gamma: float
    c20: complex
    c11: complex
    c02: complex
    c30: complex
    c21: complex
    c12: complex
    c03: complex
    recon_residual: float = 0.0
    conj_residual: float = 0.0


@dataclass
class TwistResult:
    tau1: float
    gamma: float
    imag_residual: float
    oracle_residual: Optional[float] = None
    phase_residual: Optional[float] = None


def _guard_resonance(gamma, tol):
    g = abs(gamma)
    for j, ang in sorted(RESONANT_ANGLES.items()):
        if abs(g - ang) < tol:
            raise Resonant(f"gamma within {tol} of the j={j} resonance")


# -- local boundary expansions -------------------------------------------------

class _Local:
    """Arclength Taylor data at a boundary point: tangent-angle offset W(ds)
    and position offsets X, Y in the local (tangent, inward normal) frame."""

    __slots__ = ("W", "X", "Y")

    def __init__(self, curve, phi, order):
        r_taylor = curve.radius_taylor(phi, order)
        s_of_dphi = u_integrate(r_taylor)[: order + 2]
        dphi_of_s = u_revert(s_of_dphi[: order + 2], order + 1)
        self.W = dphi_of_s[: order + 1]
        cosw = _compose_u(cos_taylor(order), self.W, order)
        sinw = _compose_u(sin_taylor(order), self.W, order)
        self.X = u_integrate(cosw)[: order + 1]
        self.Y = u_integrate(sinw)[: order + 1]


def _compose_u(f, g, order):
    from .series import u_compose

    return u_compose(f, g, order)


def _half_map(loc_a, loc_b, ell, order=3):
    """Series jet of one bounce of the diameter orbit, start frame -> end frame."""
    ds0 = TPS2.variable(0, order)
    dp0 = TPS2.variable(1, order)
    w_a = ds0.eval_univariate(loc_a.W)
    theta0 = dp0.eval_univariate(arcsin_taylor(order + 3))
    u = w_a - theta0
    sin_u = u.eval_univariate(sin_taylor(order + 3))
    cos_u = u.eval_univariate(cos_taylor(order + 3))
    x_a = ds0.eval_univariate(loc_a.X)
    y_a = ds0.eval_univariate(loc_a.Y)
    dxb = u_derivative(loc_b.X)
    dyb = u_derivative(loc_b.Y)

    kappa_a = loc_a.W[1]
    x = TPS2(order)
    x.c[1, 0] = ell * kappa_a - 1.0
    x.c[0, 1] = -ell

    for _ in range(4):
        g = sin_u * (ell - x.eval_univariate(loc_b.Y) - y_a) + \
            cos_u * (-x.eval_univariate(loc_b.X) - x_a)
        gp = sin_u * (-x.eval_univariate(dyb)) + cos_u * (-x.eval_univariate(dxb))
        x = x - g * tps2_reciprocal(gp)
    resid = sin_u * (ell - x.eval_univariate(loc_b.Y) - y_a) + \
        cos_u * (-x.eval_univariate(loc_b.X) - x_a)
    if float(np.max(np.abs(resid.c))) > 1e-9 * max(1.0, ell):
        raise SeriesSolveFailure("impact condition not solved to series order")

    theta1 = w_a - x.eval_univariate(loc_b.W) - theta0
    p1 = theta1.eval_univariate(sin_taylor(order + 3))
    return x, p1


def jet3_t2(curve, diameter, order=3, expansion_order=6):
    """Degree-3 jet of T^2 at the elliptic diameter, by truncated series."""
    if diameter.stability.kind != "elliptic":
        raise NotElliptic(f"diameter is {diameter.stability.kind}")
    phi_a = diameter.phi0
    phi_b = phi_a + math.pi
    loc_a = _Local(curve, phi_a, expansion_order)
    loc_b = _Local(curve, phi_b, expansion_order)
    ell = diameter.L0
    s1, p1 = _half_map(loc_a, loc_b, ell, order)
    s2, p2 = _half_map(loc_b, loc_a, ell, order)
    cs = tps2_substitute(s2, s1, p1)
    cp = tps2_substitute(p2, s1, p1)
    jet = Jet2D(cs=cs.c.real.copy(), cp=cp.c.real.copy(), phi0=phi_a, order=order)
    if abs(jet.cs[0, 0]) > 1e-10 or abs(jet.cp[0, 0]) > 1e-10:
        raise SeriesSolveFailure("jet has a nonzero constant term")
    return jet


# -- finite-difference oracle --------------------------------------------------

_W5 = {
    0: np.array([0.0, 0.0, 1.0, 0.0, 0.0]),
    1: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
    2: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
    3: np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0,
}


def _t2_grid(curve, diameter, h):
    """Evaluate T^2 on the 5x5 stencil around the diameter; returns (5,5,2)."""
    s_a = float(curve.arclength(diameter.phi0))
    total = curve.total_arclength
    offs = h * np.arange(-2.0, 3.0)
    ds, dp = np.meshgrid(offs, offs, indexing="ij")
    phi0 = curve.angle_of_arclength(s_a + ds.ravel())
    theta0 = np.arcsin(dp.ravel())
    phi1, theta1, _ = _impact_batch(curve, phi0, theta0)
    phi2, theta2, _ = _impact_batch(curve, phi1, theta1)
    s2 = curve.arclength(phi2)
    ds2 = s2 - s_a
    ds2 -= total * np.round(ds2 / total)
    out = np.stack([ds2, np.sin(theta2)], axis=-1)
    return out.reshape(5, 5, 2)


def _fd_coeffs(grid, h):
    cs = np.zeros((4, 4))
    cp = np.zeros((4, 4))
    for a in range(4):
        for b in range(4 - a):
            wa = _W5[a] / h**a
            wb = _W5[b] / h**b
            val = np.einsum("i,j,ijk->k", wa, wb, grid)
            fact = math.factorial(a) * math.factorial(b)
            cs[a, b] = val[0] / fact
            cp[a, b] = val[1] / fact
    return cs, cp


def jet3_t2_fd(curve, diameter, steps=(4e-3, 2e-3)):
    """Finite-difference jet oracle: 5-point stencils at two step sizes with
    Richardson extrapolation (independent of the series route)."""
    if diameter.stability.kind != "elliptic":
        raise NotElliptic(f"diameter is {diameter.stability.kind}")
    h1, h2 = steps
    cs1, cp1 = _fd_coeffs(_t2_grid(curve, diameter, h1), h1)
    cs2, cp2 = _fd_coeffs(_t2_grid(curve, diameter, h2), h2)
    ratio = h1 / h2
    cs = np.zeros((4, 4))
    cp = np.zeros((4, 4))
    for a in range(4):
        for b in range(4 - a):
            p = 2 if max(a, b) == 3 else 4
            w = ratio**p
            cs[a, b] = (w * cs2[a, b] - cs1[a, b]) / (w - 1.0)
            cp[a, b] = (w * cp2[a, b] - cp1[a, b]) / (w - 1.0)
    cs[0, 0] = cp[0, 0] = 0.0
    return Jet2D(cs=cs, cp=cp, phi0=diameter.phi0)


def jet_difference(jet_a, jet_b, abs_floor=1e-10):
    """Worst relative coefficient disagreement (absolute below `abs_floor`)."""
    worst = 0.0
    for arr_a, arr_b in ((jet_a.cs, jet_b.cs), (jet_a.cp, jet_b.cp)):
        for a in range(4):
            for b in range(4 - a):
                if a + b == 0:
                    continue
                va, vb = arr_a[a, b], arr_b[a, b]
                scale = max(abs(va), abs(vb))
                if scale < abs_floor:
                    continue
                worst = max(worst, abs(va - vb) / scale)
    return worst


# -- complexification and the twist coefficient --------------------------------

def complexify(jet, resonance_tol=1e-6, phase=0.0):
    """Bring the jet to the diagonalized complex form
    Z = e^{i gamma} (z + c20 z^2 + c11 z conj(z) + ... + c03 conj(z)^3)."""
    m = jet.linear()
    tr = m[0, 0] + m[1, 1]
    if abs(tr) >= 2.0:
        raise NotElliptic(f"linear part has |trace| = {abs(tr):.6f} >= 2")
    evals, evecs = np.linalg.eig(m)
    idx = int(np.argmax(evals.imag))
    mu = evals[idx]
    u = evecs[:, idx].astype(complex)
    omega_t = 2.0 * (u[0] * np.conj(u[1])).imag  # omega(u, conj u) = i * omega_t
    if omega_t < 0:
        u = np.conj(u)
        mu = np.conj(mu)
        omega_t = -omega_t
    u = u / math.sqrt(2.0 * omega_t)  # now omega(u, conj u) = i/2
    u = u * cmath.exp(1j * (phase - cmath.phase(u[0])))
    gamma = cmath.phase(mu)
    _guard_resonance(gamma, resonance_tol)

    order = jet.order
    z = TPS2.variable(0, order, dtype=complex)
    zb = TPS2.variable(1, order, dtype=complex)
    xs = z * u[0] + zb * np.conj(u[0])
    xp = z * u[1] + zb * np.conj(u[1])
    fs = tps2_substitute(TPS2(order, jet.cs.astype(complex)), xs, xp)
    fp = tps2_substitute(TPS2(order, jet.cp.astype(complex)), xs, xp)
    # projection onto u along omega: a = omega(v, conj u)/omega(u, conj u)
    zser = (fs * np.conj(u[1]) - fp * np.conj(u[0])) * (-2.0j)
    wser = (fs * u[1] - fp * u[0]) * (2.0j)

    mu_hat = cmath.exp(1j * gamma)
    if abs(zser.c[1, 0] - mu) > 1e-8 or abs(zser.c[0, 1]) > 1e-8:
        raise SeriesSolveFailure("complex diagonalization failed")
    conj_res = float(max(
        abs(wser.c[j, k] - np.conj(zser.c[k, j]))
        for j in range(order + 1) for k in range(order + 1 - j)
    ))

    # reconstruction residual: rebuild the real jet from (zser, conj) exactly
    fs_back = zser * u[0] + wser * np.conj(u[0])
    fp_back = zser * u[1] + wser * np.conj(u[1])
    recon = max(float(np.max(np.abs(fs_back.c - fs.c))),
                float(np.max(np.abs(fp_back.c - fp.c))))

    def c(jk):
        return complex(zser.c[jk] / mu_hat)

    return ComplexNormalCoeffs(
        gamma=gamma,
        c20=c((2, 0)), c11=c((1, 1)), c02=c((0, 2)),
        c30=c((3, 0)), c21=c((2, 1)), c12=c((1, 2)), c03=c((0, 3)),
        recon_residual=recon,
        conj_residual=conj_res,
    )


def tau1(coeffs, resonance_tol=1e-6, imag_tol=1e-10):
    """Twist coefficient from the degree-3 complex coefficients:

        tau1 = (1/i) [c21 + 2|c20|^2 (2L+1)/(L-1) + 2|c02|^2 / (L^3-1)],

    L = e^{i gamma}.  (The often-quoted variant with |c20|^2 on both
    denominators is the special case |c02| = |c20|; the general form above
    falls out of the explicit degree-2 normal-form step and is exactly real
    for a symplectic jet, where Re c21 = |c02|^2 - |c20|^2.)

    `imag_tol` bounds the acceptable imaginary residue relative to |tau1|;
    loosen it when feeding finite-difference jets, whose noise shows up
    exactly there.
    """
    _guard_resonance(coeffs.gamma, resonance_tol)
    g = cmath.exp(1j * coeffs.gamma)
    val = (coeffs.c21
           + 2.0 * abs(coeffs.c20) ** 2 * (2.0 * g + 1.0) / (g - 1.0)
           + 2.0 * abs(coeffs.c02) ** 2 / (g**3 - 1.0)) / 1j
    imag_res = abs(val.imag)
    if imag_res > imag_tol * max(1.0, abs(val)):
        raise SeriesSolveFailure(f"tau1 has imaginary residue {imag_res:.3e}")
    return TwistResult(tau1=float(val.real), gamma=coeffs.gamma,
                       imag_residual=imag_res)


def tau1_slope(L0, R0, Rpi):
    """Coefficient of lambda''''(0) in tau1(beta) - tau1(alpha) for
    third-order-contact perturbations with lambda''''(pi) = 0,
    as the closed form -(1/16) L0 (L0-Rpi) / ((L0-R0)(L0-R0-Rpi))."""
    eps = 1e-12 * max(1.0, abs(L0))
    for val, name in ((L0, "L0"), (L0 - R0, "L0-R0"), (L0 - Rpi, "L0-Rpi"),
                      (L0 - R0 - Rpi, "L0-R0-Rpi")):
        if abs(val) < eps:
            raise Degenerate(f"{name} vanishes")
    return -(L0 * (L0 - Rpi)) / (16.0 * (L0 - R0) * (L0 - R0 - Rpi))


def tau1_contact_slope(L0, R0, Rpi):
    """Measured-truth variant of tau1_slope for this implementation's tau1:
    the lambda''''(0) response is L0 (L0-Rpi) / (8 R0^2 (L0-R0)(L0-R0-Rpi)).

    Differs from the closed form of `tau1_slope` by -2/R0^2: 1/R0^2 is the
    chain factor between the fourth phi-derivative of lambda and the second
    arclength derivative of the curvature radius it shifts, and -2 is the
    normalization/orientation of the complex coordinates used there.
    Validated against direct rotation-number measurements.
    """
    return -2.0 / R0**2 * tau1_slope(L0, R0, Rpi)


def twist_pipeline(curve, diameter, fd_steps=(4e-3, 2e-3), phases=8, seed=0):
    """Series-route tau1 with oracle and phase-invariance diagnostics attached."""
    jet = jet3_t2(curve, diameter)
    coeffs = complexify(jet)
    result = tau1(coeffs)
    jet_fd = jet3_t2_fd(curve, diameter, fd_steps)
    res_fd = tau1(complexify(jet_fd), imag_tol=1e-3)
    scale = max(abs(result.tau1), abs(res_fd.tau1), 1e-10)
    result.oracle_residual = abs(result.tau1 - res_fd.tau1) / scale
    rng = np.random.default_rng(seed)
    spread = 0.0
    for chi in rng.uniform(0.0, TWO_PI, phases):
        alt = tau1(complexify(jet, phase=chi))
        spread = max(spread, abs(alt.tau1 - result.tau1))
    result.phase_residual = spread
    return result, coeffs, jet


# -- island evidence -----------------------------------------------------------

@dataclass
class IslandProbe:
    max_excursion: float
    delta: float
    iterations: int
    rotation_estimate: float
    escaped: bool


def _anchor_data(curve, anchor):
    if isinstance(anchor, Diameter):
        phis = np.array([anchor.phi0, anchor.phi0 + math.pi])
        thetas = np.zeros(2)
        tr = None
    elif isinstance(anchor, PeriodicOrbit):
        order = np.argsort(anchor.phis)  # phis stored mod 2pi; rebuild the path
        phis = anchor.phis
        thetas = anchor.thetas
        tr = anchor.trace
    else:
        raise TypeError("anchor must be a Diameter or PeriodicOrbit")
    return phis, thetas, tr


def island_probe(curve, anchor, delta, iters, ring=16):
    """Iterate a ring of radius `delta` around a periodic point under the
    return map and report the maximal excursion plus a rotation-number
    estimate.

    For elliptic anchors the excursion is measured in coordinates
    normalized by the linear eigenbasis (the linearized return map is then
    a rigid rotation, so a circle is linearly invariant and the excursion
    isolates nonlinear drift); hyperbolic anchors use raw (s, p) distance.
    """
    if delta == 0.0:
        return IslandProbe(0.0, 0.0, iters, 0.0, False)
    phis, thetas, _ = _anchor_data(curve, anchor)
    n = len(phis)
    # lifted legs of the periodic orbit, for warm starts
    lifts = [phis[0]]
    for j in range(n):
        nxt = phis[(j + 1) % n]
        lifts.append(lifts[-1] + (nxt - lifts[-1]) % TWO_PI)
    legs = np.diff(lifts)

    s_center = float(curve.arclength(phis[0]))
    total = curve.total_arclength
    mat = np.eye(2)
    ells = []
    for j in range(n):
        _, _, ell = _impact_batch(curve, phis[j], thetas[j])
        ells.append(float(ell[0]))
    r = curve.radius(np.array(phis))
    c = np.cos(thetas)
    for j in range(n):
        k = (j + 1) % n
        mat = _tangent_from_geometry(ells[j], float(r[j]), float(r[k]), c[j], c[k]) @ mat
    tr = float(np.trace(mat))
    if abs(tr) < 2.0:
        evals, evecs = np.linalg.eig(mat)
        idx = int(np.argmax(evals.imag))
        u = evecs[:, idx]
        t = 2.0 * (u[0] * np.conj(u[1])).imag
        if t < 0:
            u = np.conj(u)
            t = -t
        u = u / math.sqrt(2.0 * t)
        basis = np.column_stack([2.0 * u.real, -2.0 * u.imag])
    else:
        basis = np.eye(2)
    basis_inv = np.linalg.inv(basis)

    p_center = math.sin(float(thetas[0]))
    angles = TWO_PI * np.arange(ring) / ring
    xy = basis @ (delta * np.stack([np.cos(angles), np.sin(angles)]))
    phi = curve.angle_of_arclength(s_center + xy[0])
    theta = np.arcsin(np.clip(p_center + xy[1], -0.999999, 0.999999))

    winding = np.zeros(ring)
    prev_ang = angles.copy()
    max_exc = delta
    escaped = False
    done = 0
    for it in range(iters):
        for j in range(n):
            guess = phi + legs[j]
            warm = _impact_warm(curve, phi, theta, guess)
            if warm is None:
                phi, theta, _ = _impact_batch(curve, phi, theta, guess=guess)
            else:
                phi, theta = warm
        done = it + 1
        ds = curve.xyrs(phi)[3] - s_center
        ds -= total * np.round(ds / total)
        norm_xy = basis_inv @ np.stack([ds, np.sin(theta) - p_center])
        dist = np.hypot(norm_xy[0], norm_xy[1])
        max_exc = max(max_exc, float(np.max(dist)))
        ang = np.arctan2(norm_xy[1], norm_xy[0])
        inc = (ang - prev_ang + math.pi) % TWO_PI - math.pi
        winding += inc
        prev_ang = ang
        if max_exc > 50.0 * delta:
            escaped = True
            break
    rot = float(np.mean(winding)) / (TWO_PI * max(done, 1))
    return IslandProbe(max_excursion=max_exc, delta=delta, iterations=done,
                       rotation_estimate=rot, escaped=escaped)
