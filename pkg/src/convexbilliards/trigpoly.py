"""Real trigonometric polynomials with exact derivatives and certified bounds.

Both curvature profiles R(phi) and normal-perturbation fields lambda(phi)
are represented this way: derivatives of any order are exact, closure is a
linear constraint on the harmonic-1 coefficients, and products stay in the
class (degrees add).
"""

import math

import numpy as np


class TrigPoly:
    """a0 + sum_k (ak[k-1] cos(k phi) + bk[k-1] sin(k phi)), 2pi-periodic."""

    __slots__ = ("a0", "ak", "bk")

    def __init__(self, a0=0.0, ak=(), bk=()):
        ak = np.atleast_1d(np.asarray(ak, dtype=float))
        bk = np.atleast_1d(np.asarray(bk, dtype=float))
        n = max(len(ak), len(bk))
        self.a0 = float(a0)
        self.ak = np.zeros(n)
        self.bk = np.zeros(n)
        self.ak[: len(ak)] = ak
        self.bk[: len(bk)] = bk

    @property
    def degree(self):
        return len(self.ak)

    def trimmed(self, tol=0.0):
        """Drop trailing harmonics with |a|,|b| <= tol."""
        n = self.degree
        while n > 0 and abs(self.ak[n - 1]) <= tol and abs(self.bk[n - 1]) <= tol:
            n -= 1
        return TrigPoly(self.a0, self.ak[:n], self.bk[:n])

    # -- evaluation ---------------------------------------------------------

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        if self.degree == 0:
            return np.broadcast_to(np.float64(self.a0), phi.shape).copy() if phi.ndim else np.float64(self.a0)
        k = np.arange(1, self.degree + 1)
        arg = np.multiply.outer(phi, k)
        out = self.a0 + np.cos(arg) @ self.ak + np.sin(arg) @ self.bk
        return out if phi.ndim else np.float64(out)

    def derivative(self, order=1):
        p = self
        for _ in range(order):
            k = np.arange(1, p.degree + 1)
            p = TrigPoly(0.0, k * p.bk, -k * p.ak)
        return p

    def cumulative(self, phi):
        """Integral of the polynomial from 0 to phi (exact; not periodic)."""
        phi = np.asarray(phi, dtype=float)
        if self.degree == 0:
            out = self.a0 * phi
            return out if phi.ndim else np.float64(out)
        k = np.arange(1, self.degree + 1)
        arg = np.multiply.outer(phi, k)
        out = self.a0 * phi + np.sin(arg) @ (self.ak / k) + (1.0 - np.cos(arg)) @ (self.bk / k)
        return out if phi.ndim else np.float64(out)

    def taylor(self, phi0, order):
        """Taylor coefficients [f, f', f''/2!, ...] at phi0, length order+1."""
        coeffs = np.empty(order + 1)
        p = self
        fact = 1.0
        for m in range(order + 1):
            if m > 0:
                p = p.derivative()
                fact *= m
            coeffs[m] = p(phi0) / fact
        return coeffs

    # -- algebra ------------------------------------------------------------

    def _complex(self):
        """Spectrum c[-D..D] packed as array index k+D; c_k = (a_k - i b_k)/2."""
        d = self.degree
        c = np.zeros(2 * d + 1, dtype=complex)
        c[d] = self.a0
        for k in range(1, d + 1):
            c[d + k] = 0.5 * (self.ak[k - 1] - 1j * self.bk[k - 1])
            c[d - k] = 0.5 * (self.ak[k - 1] + 1j * self.bk[k - 1])
        return c

    @staticmethod
    def _from_complex(c):
        d = (len(c) - 1) // 2
        a0 = c[d].real
        ak = np.array([2.0 * c[d + k].real for k in range(1, d + 1)])
        bk = np.array([-2.0 * c[d + k].imag for k in range(1, d + 1)])
        return TrigPoly(a0, ak, bk).trimmed(0.0)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            if self.degree == 0:
                return other * self.a0
            if other.degree == 0:
                return self * other.a0
            return TrigPoly._from_complex(np.convolve(self._complex(), other._complex()))
        return TrigPoly(self.a0 * other, self.ak * other, self.bk * other)

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, TrigPoly):
            n = max(self.degree, other.degree)
            ak = np.zeros(n)
            bk = np.zeros(n)
            ak[: self.degree] += self.ak
            bk[: self.degree] += self.bk
            ak[: other.degree] += other.ak
            bk[: other.degree] += other.bk
            return TrigPoly(self.a0 + other.a0, ak, bk)
        return TrigPoly(self.a0 + other, self.ak, self.bk)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * (other if isinstance(other, TrigPoly) else TrigPoly(other))

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return (-1.0) * self

    def shifted(self, delta):
        """The polynomial phi -> f(phi + delta)."""
        k = np.arange(1, self.degree + 1)
        c, s = np.cos(k * delta), np.sin(k * delta)
        return TrigPoly(self.a0, self.ak * c + self.bk * s, -self.ak * s + self.bk * c)

    # -- certified bounds ---------------------------------------------------

    def deriv_sup_bound(self, order=1):
        """sum_k k^order (|ak|+|bk|), an upper bound for sup|f^(order)|."""
        k = np.arange(1, self.degree + 1, dtype=float)
        return float(np.sum(k**order * (np.abs(self.ak) + np.abs(self.bk))))

    def max_abs(self, rel_slack=0.01, n0=None):
        """Upper bound for sup|f| that overshoots the true sup by <= rel_slack.

        Grid maximum plus a Lipschitz slack from the coefficient-norm bound
        on f'; the grid is refined until the slack is small relative to the
        grid maximum.
        """
        lip = self.deriv_sup_bound(1)
        n = n0 or max(256, 16 * (self.degree + 1))
        while True:
            phi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
            gmax = float(np.max(np.abs(self(phi))))
            slack = lip * math.pi / n
            if slack <= rel_slack * max(gmax, 1e-300) or n >= 1 << 22:
                return gmax + slack
            n *= 2

    def min_bound(self, n0=None):
        """(certified_lower_bound, grid_min): f >= certified bound everywhere."""
        lip = self.deriv_sup_bound(1)
        n = n0 or max(256, 16 * (self.degree + 1))
        gmin = None
        while True:
            phi = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
            gmin = float(np.min(self(phi)))
            slack = lip * math.pi / n
            if gmin <= 0.0 or gmin - slack > 0.0 or n >= 1 << 22:
                return gmin - slack, gmin
            n *= 2

    def is_positive(self):
        lo, gmin = self.min_bound()
        if gmin <= 0.0:
            return False
        return lo > 0.0

    def __repr__(self):
        return f"TrigPoly(a0={self.a0!r}, degree={self.degree})"


def fit_trigpoly(nodes, values, degree):
    """Least-squares trig polynomial through (nodes, values); returns (poly, max residual)."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    cols = [np.ones_like(nodes)]
    for k in range(1, degree + 1):
        cols.append(np.cos(k * nodes))
        cols.append(np.sin(k * nodes))
    design = np.column_stack(cols)
    sol, *_ = np.linalg.lstsq(design, values, rcond=None)
    poly = TrigPoly(sol[0], sol[1::2], sol[2::2])
    resid = float(np.max(np.abs(design @ sol - values)))
    return poly, resid


def adaptive_fit(nodes, values, tol, max_degree=512, start_degree=8):
    """Double the harmonic degree until the max node residual drops below tol.

    The node set must oversample the highest degree tried (verified), so the
    residual at the nodes is a faithful proxy for the uniform error.
    """
    best = None
    degree = start_degree
    while degree <= max_degree:
        if 2 * degree + 1 > len(nodes) // 2:
            break
        poly, resid = fit_trigpoly(nodes, values, degree)
        if best is None or resid < best[1]:
            best = (poly, resid)
        if resid < tol:
            return poly, resid
        degree *= 2
    return best
