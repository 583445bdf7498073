import math

import numpy as np
import pytest

from convexbilliards import (PhaseState, SPState, chord, find_periodic_orbit,
                             find_periodic_orbits, from_sp, invariant_density,
                             iterate, iterate_batch, next_impact, tangent_map,
                             to_sp)
from convexbilliards.dynamics import _impact_batch
from convexbilliards.errors import SolveFailure
from conftest import random_profile_curve

TWO_PI = 2 * math.pi


def map_sp(curve, s, p):
    """One bounce in (s, p) coordinates, vectorized (used as FD oracle)."""
    phi0 = curve.angle_of_arclength(np.asarray(s, dtype=float))
    theta0 = np.arcsin(np.asarray(p, dtype=float))
    phi1, theta1, _ = _impact_batch(curve, phi0, theta0)
    return curve.arclength(phi1), np.sin(theta1)


def fd_tangent(curve, s, p, h=1e-3):
    """5-point central differences with one Richardson level (order 4)."""
    def jac(hh):
        out = np.empty((2, 2))
        w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * hh)
        offs = np.array([-2.0, -1.0, 1.0, 2.0]) * hh
        s1, p1 = map_sp(curve, s + offs, np.full(4, p))
        out[0, 0] = w @ s1
        out[1, 0] = w @ p1
        s1, p1 = map_sp(curve, np.full(4, s), p + offs)
        out[0, 1] = w @ s1
        out[1, 1] = w @ p1
        return out

    j1, j2 = jac(h), jac(h / 2)
    return (16.0 * j2 - j1) / 15.0


class TestNextImpact:
    def test_circle_chord_angle(self, circle):
        state = next_impact(circle, PhaseState(0.3, math.pi / 6))
        assert state.phi == pytest.approx((0.3 + 2 * math.pi / 3) % TWO_PI, abs=1e-12)
        assert state.theta == pytest.approx(math.pi / 6, abs=1e-12)

    def test_circle_diameter(self, circle):
        state = next_impact(circle, PhaseState(1.0, 0.0))
        assert state.phi == pytest.approx(1.0 + math.pi, abs=1e-12)
        assert state.theta == pytest.approx(0.0, abs=1e-12)

    def test_ellipse_major_axis(self, ell21):
        # major vertex (2, 0) has tangent angle pi/2; the axis chord has length 4
        state = PhaseState(math.pi / 2, 0.0)
        out = next_impact(ell21, state)
        assert np.allclose(ell21.position(out.phi), [-2.0, 0.0], atol=1e-9)
        assert chord(ell21, state) == pytest.approx(4.0, abs=1e-9)

    def test_circle_chords(self, circle):
        assert chord(circle, PhaseState(0.1, math.pi / 6)) == pytest.approx(math.sqrt(3))
        assert chord(circle, PhaseState(0.1, 0.0)) == pytest.approx(2.0)

    def test_fig2_vertical_diameter_chord(self, fig2):
        # the chord between (0,1) and (0,3); tangent angle 0 at (0,1)
        assert chord(fig2, PhaseState(0.0, 0.0)) == pytest.approx(2.0, abs=1e-9)


class TestTangentMap:
    def test_circle_p0(self, circle):
        m = tangent_map(circle, SPState(0.2, 0.0))
        assert abs(m[0, 0]) == pytest.approx(1.0, abs=1e-10)
        assert abs(m[1, 1]) == pytest.approx(1.0, abs=1e-10)
        assert abs(m[0, 1]) == pytest.approx(2.0, abs=1e-10)
        assert abs(m[1, 0]) == pytest.approx(0.0, abs=1e-10)

    def test_circle_p05(self, circle):
        m = tangent_map(circle, SPState(0.2, 0.5))
        assert abs(m[0, 1]) == pytest.approx(4.0 / math.sqrt(3.0), abs=1e-10)

    def test_determinant_one(self, ell15, fig2):
        rng = np.random.default_rng(5)
        for curve in (ell15, fig2):
            for _ in range(50):
                sp = SPState(rng.uniform(0, curve.total_arclength),
                             rng.uniform(-0.95, 0.95))
                m = tangent_map(curve, sp)
                assert abs(np.linalg.det(m) - 1.0) < 1e-8

    def test_matches_fd_oracle(self, ell15, fig2, asym_curve):
        rng = np.random.default_rng(6)
        for curve in (ell15, fig2, asym_curve):
            for _ in range(5):
                s = rng.uniform(0, curve.total_arclength)
                p = rng.uniform(-0.8, 0.8)
                m = tangent_map(curve, SPState(s, p))
                fd = fd_tangent(curve, s, p)
                assert np.max(np.abs(m - fd) / np.maximum(np.abs(m), 1e-3)) < 1e-6


class TestIterate:
    def test_zero_steps(self, circle):
        orbit = iterate(circle, PhaseState(0.4, 0.2), 0)
        assert len(orbit) == 1
        assert orbit.phi[0] == 0.4

    def test_circle_triangle_closure(self, circle):
        orbit = iterate(circle, PhaseState(0.1, math.pi / 6), 3)
        assert (orbit.phi[3] - orbit.phi[0]) == pytest.approx(TWO_PI, abs=1e-12)

    def test_ellipse_two_periodicity(self, ell15):
        orbit = iterate(ell15, PhaseState(0.0, 0.0), 2)
        assert (orbit.phi[2] - orbit.phi[0]) % TWO_PI == pytest.approx(0.0, abs=1e-10)
        assert orbit.theta[2] == pytest.approx(0.0, abs=1e-10)

    def test_batch_matches_scalar(self, ell15):
        phi0 = np.array([0.3, 1.1])
        theta0 = np.array([0.2, -0.4])
        phi, theta = iterate_batch(ell15, phi0, theta0, 5)
        for k, (p0, t0) in enumerate(zip(phi0, theta0)):
            orbit = iterate(ell15, PhaseState(p0, t0), 5)
            assert np.allclose(orbit.phi, phi[:, k], atol=1e-10)
            assert np.allclose(orbit.theta, theta[:, k], atol=1e-10)


class TestReversibility:
    def test_reflection_conjugates_to_inverse(self, ell15, fig2):
        rng = np.random.default_rng(7)
        for curve in (ell15, fig2):
            for _ in range(20):
                state = PhaseState(rng.uniform(0, TWO_PI), rng.uniform(-1.2, 1.2) / 2)
                fwd = next_impact(curve, state)
                back = next_impact(curve, PhaseState(fwd.phi, -fwd.theta))
                assert back.phi % TWO_PI == pytest.approx(state.phi % TWO_PI, abs=1e-10)
                assert back.theta == pytest.approx(-state.theta, abs=1e-10)


class TestInvariantDensity:
    def test_values(self, circle, ell21):
        assert invariant_density(circle, PhaseState(0.3, 0.0)) == pytest.approx(1.0)
        assert invariant_density(circle, PhaseState(0.3, math.pi / 3)) == pytest.approx(0.5)
        assert invariant_density(ell21, PhaseState(0.0, 0.0)) == pytest.approx(4.0, abs=1e-9)

    def test_measure_preserved_statistically(self, ell15):
        # soft check: push an ensemble sampled from R(phi) cos(theta) through
        # one bounce and compare cell masses; Monte-Carlo tolerance only.
        rng = np.random.default_rng(8)
        n = 40000
        rmax = float(np.max(ell15.radius(np.linspace(0, TWO_PI, 512))))
        phis = np.empty(n)
        thetas = np.empty(n)
        have = 0
        while have < n:
            cand_phi = rng.uniform(0, TWO_PI, 4 * n)
            cand_theta = rng.uniform(-math.pi / 2, math.pi / 2, 4 * n)
            accept = rng.uniform(0, rmax, 4 * n) < (
                ell15.radius(cand_phi) * np.cos(cand_theta))
            take = min(n - have, int(np.sum(accept)))
            phis[have:have + take] = cand_phi[accept][:take]
            thetas[have:have + take] = cand_theta[accept][:take]
            have += take
        phi1, theta1 = iterate_batch(ell15, phis, thetas, 1)
        bins_phi = np.linspace(0, TWO_PI, 7)
        bins_p = np.linspace(-1, 1, 7)
        h0, _, _ = np.histogram2d(phis % TWO_PI, np.sin(thetas),
                                  bins=[bins_phi, bins_p])
        h1, _, _ = np.histogram2d(phi1[1] % TWO_PI, np.sin(theta1[1]),
                                  bins=[bins_phi, bins_p])
        assert np.max(np.abs(h1 - h0)) / n < 0.02


class TestPeriodicOrbits:
    def test_circle_triangle(self, circle):
        orbit = find_periodic_orbit(circle, 3, 1)
        assert np.allclose(orbit.p, 0.5, atol=1e-9)
        assert orbit.trace == pytest.approx(2.0, abs=1e-7)
        assert orbit.stability == "parabolic"

    def test_circle_diameter(self, circle):
        orbit = find_periodic_orbit(circle, 2, 1)
        assert orbit.trace == pytest.approx(2.0, abs=1e-7)

    def test_fig2_triangle_elliptic(self, fig2):
        orbit = find_periodic_orbit(fig2, 3, 1)
        assert orbit.stability == "elliptic"
        assert abs(orbit.trace) < 2.0
        assert orbit.trace == pytest.approx(1.9697066514, abs=1e-6)

    def test_fig2_pair_both_senses(self, fig2):
        fwd = find_periodic_orbit(fig2, 3, 1)
        rev = find_periodic_orbit(fig2, 3, 2)
        assert rev.stability == "elliptic"
        assert rev.trace == pytest.approx(fwd.trace, abs=1e-9)

    def test_fig2_also_finds_hyperbolic_partner(self, fig2):
        orbits = find_periodic_orbits(fig2, 3, 1)
        kinds = {o.stability for o in orbits}
        assert "elliptic" in kinds and "hyperbolic" in kinds

    def test_invalid_arguments(self, circle):
        with pytest.raises(ValueError):
            find_periodic_orbit(circle, 1, 1)
        with pytest.raises(ValueError):
            find_periodic_orbit(circle, 4, 2)

    def test_orbit_closes_under_map(self, fig2):
        orbit = find_periodic_orbit(fig2, 3, 1)
        state = PhaseState(float(orbit.phis[0]), float(orbit.thetas[0]))
        traj = iterate(fig2, state, 3)
        assert (traj.phi[3] - traj.phi[0]) == pytest.approx(TWO_PI, abs=1e-8)


class TestStateConversions:
    def test_roundtrip(self, ell15):
        state = PhaseState(1.1, 0.35)
        back = from_sp(ell15, to_sp(ell15, state))
        assert back.phi == pytest.approx(state.phi, abs=1e-12)
        assert back.theta == pytest.approx(state.theta, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            PhaseState(0.0, math.pi / 2)
        with pytest.raises(ValueError):
            SPState(0.0, 1.0)
