"""Gaussian heat kernel, spatial derivatives, Hermite polynomials, normal CDF.

Closed forms used everywhere else in the package:

    p(t, x, y)        = exp(-(x-y)^2 / 2t) / sqrt(2 pi t)
    H_n(x)            = ((-1)^n / sqrt(n!)) e^{x^2/2} (d/dx)^n e^{-x^2/2}
    d^n/dx^n p(t,x)   = (-1)^n sqrt(n!) t^{-n/2} p(t, x) H_n(x / sqrt(t))

The last identity is the numerically stable route to kernel derivatives:
one kernel evaluation plus an O(n) polynomial recurrence, no symbolic
differentiation at runtime.  Derivative orders are capped (default 12)
because the t^{-n/2} factor amplifies rounding for small t; callers that
need higher orders at t of order one may raise the cap explicitly.
"""

import math

import numpy as np
from scipy.special import ndtr

from .errors import UnsupportedOrderError

ORDER_CAP = 12


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("kernel time t must be strictly positive")
    return t


def density(t, x, y=0.0):
    """Gaussian transition density p(t, x, y).

    Strictly positive for finite arguments; raises ValueError for t <= 0
    (the kernel is singular there).  Broadcasts over array arguments.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    out = np.exp(-d * d / (2.0 * t)) / np.sqrt(2.0 * np.pi * t)
    return out if out.ndim else float(out)


def hermite(n, x, order_cap=ORDER_CAP):
    """Hermite polynomial H_n(x), normalized by 1/sqrt(n!).

    Three-term recurrence H_{k+1} = (x H_k - sqrt(k) H_{k-1}) / sqrt(k+1),
    obtained by dividing the classical probabilists' recurrence by
    sqrt((k+1)!).  H_0 = 1, H_1 = x.
    """
    if n < 0:
        raise UnsupportedOrderError("order must be nonnegative")
    if n > order_cap:
        raise UnsupportedOrderError(f"order {n} above cap {order_cap}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for k in range(1, n):
        h, h_prev = (x * h - math.sqrt(k) * h_prev) / math.sqrt(k + 1), h
    return h if h.ndim else float(h)


def hermite_form(n, t, x, order_cap=ORDER_CAP):
    """n-th spatial kernel derivative via the Hermite closed form, n >= 1."""
    if n < 1:
        raise UnsupportedOrderError("hermite_form requires order >= 1")
    if n > order_cap:
        raise UnsupportedOrderError(f"order {n} above cap {order_cap}")
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    sqrt_t = np.sqrt(t)
    sign = -1.0 if n % 2 else 1.0
    scale = sign * math.sqrt(math.factorial(n))
    out = scale * sqrt_t ** (-n) * density(t, x) * hermite(n, x / sqrt_t, order_cap)
    return out if np.ndim(out) else float(out)


def density_dx(n, t, x, y=0.0, order_cap=ORDER_CAP):
    """n-th derivative of p(t, x, y) in x; order 0 is the density itself."""
    if n < 0:
        raise UnsupportedOrderError("order must be nonnegative")
    if n == 0:
        return density(t, x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return hermite_form(n, t, x - y, order_cap)


def normal_cdf(z):
    """Standard normal CDF (erf-based, absolute accuracy ~1e-16)."""
    out = ndtr(np.asarray(z, dtype=float))
    return out if out.ndim else float(out)


def heat_equation_residual(n, t, x, rel_step=1e-4, order_cap=ORDER_CAP):
    """|d/dt p2^(n) - 1/2 d2/dx2 p2^(n)| by central differences.

    Every spatial kernel derivative solves the heat equation; the residual
    is finite-difference truncation plus rounding, small on moderate (t, x).
    """
    ht = rel_step * t
    hx = rel_step * max(1.0, abs(x))
    d_t = (
        density_dx(n, t + ht, x, order_cap=order_cap)
        - density_dx(n, t - ht, x, order_cap=order_cap)
    ) / (2.0 * ht)
    d_xx = (
        density_dx(n, t, x + hx, order_cap=order_cap)
        - 2.0 * density_dx(n, t, x, order_cap=order_cap)
        + density_dx(n, t, x - hx, order_cap=order_cap)
    ) / (hx * hx)
    return abs(d_t - 0.5 * d_xx)


def derivative_chain_residual(n, t, x, rel_step=1e-4, order_cap=ORDER_CAP):
    """|central difference of p2^(n) in x - p2^(n+1)|."""
    hx = rel_step * max(1.0, abs(x))
    fd = (
        density_dx(n, t, x + hx, order_cap=order_cap)
        - density_dx(n, t, x - hx, order_cap=order_cap)
    ) / (2.0 * hx)
    return abs(fd - density_dx(n + 1, t, x, order_cap=order_cap))
