"""The billiard map, its orbits and its exact tangent map.

Conventions
-----------
theta is the angle from the inward normal to the outgoing direction,
measured clockwise: the ray leaves alpha(phi) along Rot(-theta) eta(phi).
On the unit circle this gives (phi, theta) -> (phi + pi - 2 theta, theta).
With p = sin theta, the closed-form partials of the map in (s, p) carry a
sign flip in the off-diagonal entries relative to the usual convention in
which the ray is rotated counterclockwise; the finite-difference oracle in
the test suite pins the signs used here.

Impact solving parametrizes the next impact by its tangent angle phi1 and
finds the zero of cross(d, alpha(phi1) - alpha(phi0)) by bracketing on a
coarse grid (or from a caller-supplied warm start) followed by safeguarded
Newton.  Strict convexity makes the forward intersection unique.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import NotFound, SolveFailure

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class PhaseState:
    """Boundary angle phi and reflection angle theta, |theta| < pi/2."""

    phi: float
    theta: float

    def __post_init__(self):
        if not abs(self.theta) < HALF_PI:
            raise ValueError(f"|theta| must be < pi/2, got {self.theta}")


@dataclass(frozen=True)
class SPState:
    """Arclength s and p = sin(theta), |p| < 1."""

    s: float
    p: float

    def __post_init__(self):
        if not abs(self.p) < 1.0:
            raise ValueError(f"|p| must be < 1, got {self.p}")


def to_sp(curve, state):
    return SPState(float(curve.arclength(state.phi)), math.sin(state.theta))


def from_sp(curve, sp):
    return PhaseState(float(curve.angle_of_arclength(sp.s)), math.asin(sp.p))


# -- impact solving -----------------------------------------------------------

_GRID = 64
_EDGE = 1e-9


def _ray_gap(curve, dx, dy, x0, y0, phi):
    """cross(d, alpha(phi) - p0) and its phi-derivative."""
    x, y, radius, _ = curve.xyrs(phi)
    g = dx * (y - y0) - dy * (x - x0)
    gp = radius * (dx * np.sin(phi) - dy * np.cos(phi))
    return g, gp


def _impact_batch(curve, phi0, theta0, guess=None):
    """Vectorized next impact: returns (phi1 in (phi0, phi0+2pi), theta1, chord)."""
    phi0 = np.atleast_1d(np.asarray(phi0, dtype=float))
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    psi = phi0 + HALF_PI - theta0
    dx, dy = np.cos(psi), np.sin(psi)
    x0, y0, _, _ = curve.xyrs(phi0)

    need_scan = np.ones(phi0.shape, dtype=bool)
    phi1 = np.empty_like(phi0)
    chord = np.empty_like(phi0)
    min_chord = 1e-7 * curve.total_arclength

    if guess is not None:
        # warm start: plain Newton, validated on the final evaluation
        x = np.asarray(guess, dtype=float).copy()
        for _ in range(14):
            g, gp = _ray_gap(curve, dx, dy, x0, y0, x)
            step = g / np.where(gp == 0.0, np.inf, gp)
            x -= step
            if np.max(np.abs(step)) < 5e-13:
                break
        xx, yy, _, _ = curve.xyrs(x)
        g = dx * (yy - y0) - dy * (xx - x0)
        ell = (xx - x0) * dx + (yy - y0) * dy
        ok = (np.abs(g) < 1e-9 * curve.total_arclength) & (ell > min_chord)
        phi1[ok] = (phi0 + (x - phi0) % TWO_PI)[ok]
        chord[ok] = ell[ok]
        need_scan = ~ok

    if np.any(need_scan):
        idx = np.nonzero(need_scan)[0]
        base = phi0[idx]
        offs = np.linspace(_EDGE, TWO_PI - _EDGE, _GRID + 1)
        grid = base[None, :] + offs[:, None]
        g_grid, _ = _ray_gap(curve, dx[idx][None, :], dy[idx][None, :],
                             x0[idx][None, :], y0[idx][None, :], grid)
        signs = np.signbit(g_grid)
        change = signs[:-1] != signs[1:]
        has = np.any(change, axis=0)
        if not np.all(has):
            bad = idx[~has]
            raise SolveFailure(f"no impact bracket found (grazing ray?) at index {bad[0]}")
        first = np.argmax(change, axis=0)
        sel = np.arange(len(idx))
        blo = grid[first, sel]
        bhi = grid[first + 1, sel]
        bglo = g_grid[first, sel]

        x = 0.5 * (blo + bhi)
        for _ in range(90):
            g, gp = _ray_gap(curve, dx[idx], dy[idx], x0[idx], y0[idx], x)
            same = np.signbit(g) == np.signbit(bglo)
            blo = np.where(same, x, blo)
            bhi = np.where(same, bhi, x)
            step = g / np.where(gp == 0.0, np.inf, gp)
            xn = x - step
            outside = (xn <= blo) | (xn >= bhi)
            xn = np.where(outside, 0.5 * (blo + bhi), xn)
            done = np.abs(xn - x) < 1e-14
            x = xn
            if np.all(done) and np.max(bhi - blo) < 1e-12:
                break
        phi1[idx] = x
        xx, yy, _, _ = curve.xyrs(x)
        chord[idx] = (xx - x0[idx]) * dx[idx] + (yy - y0[idx]) * dy[idx]

    theta1 = phi0 - phi1 + math.pi - theta0
    if np.any(chord <= 0):
        raise SolveFailure("impact solve returned a non-forward intersection")
    return phi1, theta1, chord


def _impact_warm(curve, phi0, theta0, guess):
    """Lean warm-start bounce for tightly tracked batches (ring probes).

    Returns (phi1, theta1) or None when any point fails validation; the
    caller falls back to the full bracketing solver.
    """
    psi = phi0 + HALF_PI - theta0
    dx, dy = np.cos(psi), np.sin(psi)
    x0, y0, _, _ = curve.xyrs(phi0)
    x = guess
    for _ in range(3):
        xx, yy, radius, _ = curve.xyrs(x)
        g = dx * (yy - y0) - dy * (xx - x0)
        gp = radius * (dx * np.sin(x) - dy * np.cos(x))
        x = x - g / gp
    xx, yy, radius, _ = curve.xyrs(x)
    g = dx * (yy - y0) - dy * (xx - x0)
    ell = (xx - x0) * dx + (yy - y0) * dy
    scale = curve.total_arclength
    if not np.all((np.abs(g) < 1e-9 * scale) & (ell > 1e-7 * scale)):
        return None
    gp = radius * (dx * np.sin(x) - dy * np.cos(x))
    x = x - g / gp
    return x, phi0 - x + math.pi - theta0


def next_impact(curve, state):
    phi1, theta1, _ = _impact_batch(curve, state.phi, state.theta)
    return PhaseState(float(phi1[0]) % TWO_PI, float(theta1[0]))


def chord(curve, state):
    """Length of the chord leaving `state`."""
    _, _, ell = _impact_batch(curve, state.phi, state.theta)
    return float(ell[0])


def invariant_density(curve, state):
    """Density R(phi) cos(theta) of the invariant measure."""
    return float(curve.radius(state.phi) * math.cos(state.theta))


def tangent_map(curve, sp):
    """Derivative of the billiard map at sp = (s, p), in (s, p) coordinates.

    Entries are the closed-form partials assembled from the chord length,
    the curvature radii and cos(theta) at both impacts; the determinant is
    exactly 1 in exact arithmetic.
    """
    phi0 = float(curve.angle_of_arclength(sp.s))
    theta0 = math.asin(sp.p)
    phi1, theta1, ell = _impact_batch(curve, phi0, theta0)
    return _tangent_from_geometry(
        float(ell[0]),
        float(curve.radius(phi0)),
        float(curve.radius(phi1[0])),
        math.cos(theta0),
        math.cos(float(theta1[0])),
    )


def _tangent_from_geometry(ell, r0, r1, c0, c1):
    a = (ell - r0 * c0) / (r0 * c1)
    b = ell / (c0 * c1)
    cc = (ell - r0 * c0 - r1 * c1) / (r0 * r1)
    d = (ell - r1 * c1) / (r1 * c0)
    return np.array([[a, -b], [-cc, d]])


@dataclass
class Orbit:
    """A billiard orbit; phi is the monotone lift (not reduced mod 2pi)."""

    phi: np.ndarray
    theta: np.ndarray
    s: np.ndarray
    p: np.ndarray
    points: np.ndarray

    def __len__(self):
        return len(self.phi)


def iterate(curve, state, n):
    """n forward bounces from `state`; element k+1 = next_impact(element k)."""
    phi = np.empty(n + 1)
    theta = np.empty(n + 1)
    phi[0], theta[0] = state.phi, state.theta
    cur_phi = np.array([state.phi])
    cur_theta = np.array([state.theta])
    for k in range(n):
        try:
            cur_phi, cur_theta, _ = _impact_batch(curve, cur_phi, cur_theta)
        except SolveFailure as exc:
            raise SolveFailure(f"orbit failed at step {k + 1}: {exc}", step=k + 1) from exc
        phi[k + 1], theta[k + 1] = cur_phi[0], cur_theta[0]
    return _orbit_from_angles(curve, phi, theta)


def _orbit_from_angles(curve, phi, theta):
    return Orbit(
        phi=phi,
        theta=theta,
        s=curve.arclength(phi),
        p=np.sin(theta),
        points=curve.position(phi),
    )


def iterate_batch(curve, phi0, theta0, n):
    """Advance a batch of states n bounces; returns (phi, theta) of shape (n+1, K)."""
    phi0 = np.asarray(phi0, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    phi = np.empty((n + 1,) + phi0.shape)
    theta = np.empty_like(phi)
    phi[0], theta[0] = phi0, theta0
    for k in range(n):
        phi[k + 1], theta[k + 1], _ = _impact_batch(curve, phi[k], theta[k])
    return phi, theta


def stability_from_trace(tr, tol=1e-9):
    if abs(abs(tr) - 2.0) < tol:
        return "parabolic"
    return "elliptic" if abs(tr) < 2.0 else "hyperbolic"


@dataclass
class PeriodicOrbit:
    period: int
    winding: int
    phis: np.ndarray
    thetas: np.ndarray
    s: np.ndarray
    p: np.ndarray
    points: np.ndarray
    trace: float
    stability: str
    residual: float


def _length_gradient(curve, phis):
    """Gradient of the inscribed-polygon length in the tangent-angle variables."""
    pts = curve.position(phis)
    fwd = np.roll(pts, -1, axis=0) - pts
    bwd = np.roll(pts, 1, axis=0) - pts
    nf = np.maximum(np.linalg.norm(fwd, axis=1), 1e-300)
    nb = np.maximum(np.linalg.norm(bwd, axis=1), 1e-300)
    u = -fwd / nf[:, None] - bwd / nb[:, None]
    tau = curve.tangent(phis)
    return curve.radius(phis) * np.sum(tau * u, axis=1)


def find_periodic_orbits(curve, period, winding=1, starts=32, seed=0,
                         parabolic_tol=1e-9):
    """All distinct (n, m) periodic orbits reached by the multi-start search.

    Critical points of the chord-length generating function, located by
    Newton ('hybr') on its gradient from `starts` rotated seed polygons;
    each candidate is validated as a genuine orbit (winding class, distinct
    impacts, agreement with the impact solver) before the tangent maps are
    multiplied out for tr(DT^n).  Orbits are distinct modulo cyclic
    relabeling; the list is sorted by |trace| (most stable first) with the
    smallest phi as a deterministic tie-break.
    """
    n, m = int(period), int(winding)
    if n < 2 or not (1 <= m < n):
        raise ValueError("need period >= 2 and 1 <= winding < period")
    if math.gcd(n, m) != 1:
        raise ValueError("period and winding must be coprime")
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(0.0, TWO_PI, starts)
    base = TWO_PI * m * np.arange(n) / n
    found = []
    for off in offsets:
        sol = scipy.optimize.root(lambda q: _length_gradient(curve, q),
                                  base + off, method="hybr", tol=1e-13)
        if not sol.success:
            continue
        phis = sol.x
        resid = float(np.max(np.abs(_length_gradient(curve, phis))))
        if resid > 1e-9:
            continue
        gaps = (np.roll(phis, -1) - phis) % TWO_PI
        if np.any(gaps < 1e-6) or abs(gaps.sum() - TWO_PI * m) > 1e-6:
            continue
        anchor = float(np.min(phis % TWO_PI))
        if any(abs(anchor - a) < 1e-7 for a, _ in found):
            continue
        orbit = _orbit_record(curve, phis, n, m, resid, parabolic_tol)
        if orbit is not None:
            found.append((anchor, orbit))
    if not found:
        raise NotFound(f"no ({n},{m}) periodic orbit found with {starts} starts")
    found.sort(key=lambda item: (abs(item[1].trace), item[0]))
    return [orbit for _, orbit in found]


def find_periodic_orbit(curve, period, winding=1, starts=32, seed=0,
                        parabolic_tol=1e-9):
    """Most stable (smallest |tr DT^n|) orbit from `find_periodic_orbits`.

    Periodic orbits of one class come in pairs (typically one elliptic and
    one hyperbolic); preferring the smallest |trace| reports the elliptic
    member when one exists.
    """
    return find_periodic_orbits(curve, period, winding, starts, seed,
                                parabolic_tol)[0]


def _orbit_record(curve, phis, n, m, resid, parabolic_tol):
    pts = curve.position(phis)
    fwd = np.roll(pts, -1, axis=0) - pts
    dirs = np.arctan2(fwd[:, 1], fwd[:, 0])
    thetas = (phis + HALF_PI - dirs + math.pi) % TWO_PI - math.pi
    if np.any(np.abs(thetas) >= HALF_PI - 1e-9):
        return None
    # verify against the impact solver
    phi_check, theta_check, ells = _impact_batch(curve, phis, thetas)
    forward = np.roll(phis, -1)
    if np.max(np.abs((phi_check - forward + math.pi) % TWO_PI - math.pi)) > 1e-8:
        return None
    mat = np.eye(2)
    c = np.cos(thetas)
    r = curve.radius(phis)
    for i in range(n):
        j = (i + 1) % n
        mat = _tangent_from_geometry(float(ells[i]), r[i], r[j], c[i], c[j]) @ mat
    tr = float(np.trace(mat))
    return PeriodicOrbit(
        period=n,
        winding=m,
        phis=phis % TWO_PI,
        thetas=thetas,
        s=curve.arclength(phis % TWO_PI),
        p=np.sin(thetas),
        points=pts,
        trace=tr,
        stability=stability_from_trace(tr, parabolic_tol),
        residual=resid,
    )
