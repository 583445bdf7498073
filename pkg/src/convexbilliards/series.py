"""Truncated power-series arithmetic for jet computations.

Univariate series are plain coefficient arrays (index = power). Bivariate
series are handled by :class:`TPS2`, truncated at a fixed total degree;
this is what the order-by-order solution of the impact condition and the
complexification substitutions run on.
"""

import math

import numpy as np


# -- univariate helpers ------------------------------------------------------

def u_mul(a, b, order):
    out = np.convolve(a, b)[: order + 1]
    if len(out) < order + 1:
        out = np.pad(out, (0, order + 1 - len(out)))
    return out


def u_integrate(a):
    """Antiderivative with zero constant term."""
    out = np.zeros(len(a) + 1, dtype=a.dtype)
    out[1:] = a / np.arange(1, len(a) + 1)
    return out


def u_derivative(a):
    if len(a) <= 1:
        return np.zeros(1, dtype=a.dtype)
    return a[1:] * np.arange(1, len(a))


def u_compose(f, g, order):
    """f(g(x)) truncated; requires g[0] == 0."""
    if abs(g[0]) > 1e-14:
        raise ValueError("inner series must have zero constant term")
    out = np.zeros(order + 1, dtype=np.result_type(f, g))
    for c in f[min(len(f) - 1, order) :: -1] if len(f) else []:
        out = u_mul(out, g, order)
        out[0] += c
    return out


def u_revert(f, order):
    """Series reversion: g with f(g(x)) = x; needs f[0]=0, f[1] != 0."""
    if abs(f[0]) > 1e-14 or f[1] == 0.0:
        raise ValueError("reversion needs f(0)=0 and f'(0) != 0")
    g = np.zeros(order + 1)
    g[1] = 1.0 / f[1]
    fp = u_derivative(f)
    x = np.zeros(order + 1)
    x[1] = 1.0
    for _ in range(max(1, math.ceil(math.log2(order)) + 1)):
        resid = u_compose(f, g, order) - x
        slope = u_compose(fp, g, order)
        g = g - u_mul(resid, u_reciprocal(slope, order), order)
    return g


def u_reciprocal(f, order):
    if f[0] == 0.0:
        raise ZeroDivisionError("series has zero constant term")
    c0 = f[0]
    u = -(f / c0)
    u[0] = 0.0
    out = np.zeros(order + 1, dtype=f.dtype)
    out[0] = 1.0
    for _ in range(order):
        out = u_mul(out, u, order)
        out[0] += 1.0
    return out / c0


def sin_taylor(order):
    c = np.zeros(order + 1)
    for k in range(1, order + 1, 2):
        c[k] = (-1.0) ** ((k - 1) // 2) / math.factorial(k)
    return c


def cos_taylor(order):
    c = np.zeros(order + 1)
    for k in range(0, order + 1, 2):
        c[k] = (-1.0) ** (k // 2) / math.factorial(k)
    return c


def arcsin_taylor(order):
    c = np.zeros(order + 1)
    for m in range(0, (order - 1) // 2 + 1):
        k = 2 * m + 1
        c[k] = math.factorial(2 * m) / (4.0**m * math.factorial(m) ** 2 * k)
    return c


# -- bivariate truncated series ----------------------------------------------

class TPS2:
    """Bivariate polynomial truncated at total degree `order`.

    Coefficient c[i, j] multiplies x^i y^j; entries with i + j > order are
    kept at zero.
    """

    __slots__ = ("c", "order")

    def __init__(self, order, c=None, dtype=float):
        self.order = order
        if c is None:
            self.c = np.zeros((order + 1, order + 1), dtype=dtype)
        else:
            self.c = np.asarray(c).copy()

    @staticmethod
    def variable(which, order, dtype=float):
        t = TPS2(order, dtype=dtype)
        if which == 0:
            t.c[1, 0] = 1.0
        else:
            t.c[0, 1] = 1.0
        return t

    @staticmethod
    def constant(value, order):
        t = TPS2(order, dtype=np.result_type(type(value), float))
        t.c[0, 0] = value
        return t

    def copy(self):
        return TPS2(self.order, self.c)

    def __add__(self, other):
        if isinstance(other, TPS2):
            return TPS2(self.order, self.c + other.c)
        out = self.copy()
        out.c = out.c.astype(np.result_type(out.c, type(other)))
        out.c[0, 0] += other
        return out

    __radd__ = __add__

    def __neg__(self):
        return TPS2(self.order, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TPS2):
            return TPS2(self.order, self.c * other)
        n = self.order
        out = np.zeros((n + 1, n + 1), dtype=np.result_type(self.c, other.c))
        idx = np.argwhere(self.c != 0)
        for i, j in idx:
            hi = n - i - j
            if hi < 0:
                continue
            out[i : i + hi + 1, j : j + hi + 1] += (
                self.c[i, j] * _simplex_view(other.c, hi)
            )
        t = TPS2(n, out)
        _mask_simplex(t.c, n)
        return t

    __rmul__ = __mul__

    def eval_univariate(self, taylor):
        """Compose a univariate Taylor array onto this series (zero constant)."""
        if abs(self.c[0, 0]) > 1e-13:
            raise ValueError("inner series must vanish at the origin")
        n = self.order
        out = TPS2(n, dtype=np.result_type(self.c, np.asarray(taylor)))
        for coeff in np.asarray(taylor)[min(len(taylor) - 1, n) :: -1]:
            out = out * self
            out.c[0, 0] += coeff
        return out

    def deriv_x(self):
        out = TPS2(self.order, dtype=self.c.dtype)
        out.c[:-1, :] = self.c[1:, :] * np.arange(1, self.order + 1)[:, None]
        return out

    def __call__(self, x, y):
        val = 0.0
        for i in range(self.order, -1, -1):
            inner = 0.0
            for j in range(self.order - i, -1, -1):
                inner = inner * y + self.c[i, j]
            val = val * x + inner
        return val


def _simplex_view(c, hi):
    return c[: hi + 1, : hi + 1]


def _mask_simplex(c, order):
    for i in range(order + 1):
        c[i, order - i + 1 :] = 0.0
    return c


def tps2_substitute(poly, a, b):
    """Evaluate a TPS2 `poly` at TPS2 arguments (a, b), truncated."""
    n = a.order
    dtype = np.result_type(poly.c, a.c, b.c)
    pow_a = [TPS2.constant(1.0, n)]
    pow_b = [TPS2.constant(1.0, n)]
    for _ in range(n):
        pow_a.append(pow_a[-1] * a)
        pow_b.append(pow_b[-1] * b)
    out = TPS2(n, dtype=dtype)
    for i in range(poly.order + 1):
        for j in range(poly.order + 1 - i):
            if poly.c[i, j] != 0 and i <= n and j <= n - i:
                out = out + pow_a[i] * pow_b[j] * poly.c[i, j]
    return out


def tps2_reciprocal(f):
    """1/f for a TPS2 with nonzero constant term."""
    c0 = f.c[0, 0]
    if c0 == 0:
        raise ZeroDivisionError("series has zero constant term")
    u = f * (-1.0 / c0)
    u.c[0, 0] = 0.0
    out = TPS2.constant(1.0, f.order)
    for _ in range(f.order):
        out = out * u
        out.c[0, 0] += 1.0
    return out * (1.0 / c0)
