"""Ito integration on the grid, stochastic exponentials, measure changes,
and conditional expectations of terminal payoffs through the heat kernel.

The Ito integral is the left-endpoint Riemann sum (any other evaluation
point changes the limit).  The exponential martingale

    Z_t = exp(-int_0^t lam dW - 1/2 int_0^t lam^2 du)

is built by exponentiating the exact exponent -- the dW part as a
left-endpoint sum, the lam^2 part in closed form -- so positivity is
structural and the inverse 1/Z is exact.  Conditional expectations
v(t, x) = E[f(W_T) | W_t = x] are closed form for indicator and
polynomial payoffs and 64-node Gauss-Hermite quadrature otherwise
(exact for polynomials up to degree 127 against the Gaussian weight).
"""

import math
from dataclasses import dataclass

import numpy as np

from .detfuncs import DeterministicFn
from .errors import GridMismatchError
from .grid_paths import SamplePath, TimeGrid, shift_path
from .heat_kernel import density, normal_cdf
from .payoffs import INDICATOR, POLYNOMIAL, PayoffSpec

GH_NODES = 64
EXPLOSION_BOUND = 1e6

_gh_nodes, _gh_weights = np.polynomial.hermite.hermgauss(GH_NODES)
_gh_weights = _gh_weights / np.sqrt(np.pi)


@dataclass(frozen=True)
class IntegrandPath:
    """Left-endpoint integrand values at nodes 0..N-1 of a grid."""

    grid: TimeGrid
    values: np.ndarray
    explosion_bound: float = EXPLOSION_BOUND

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.step_count,):
            raise ValueError("integrand needs one value per step (N values)")
        if not np.all(np.isfinite(values)):
            raise ValueError("integrand values must be finite")

    @property
    def square_integral(self) -> float:
        """sum values^2 * dt, the discrete L2([0,T]) norm squared."""
        return float(np.sum(self.values ** 2) * self.grid.dt)

    @property
    def flagged(self) -> bool:
        """True when the square integral exceeds the explosion bound."""
        return self.square_integral > self.explosion_bound


def ito_integral(x, w: SamplePath) -> SamplePath:
    """Cumulative left-endpoint Ito sums of x against W.

    ``x`` may be an IntegrandPath or a bare array of N left-endpoint values.
    """
    if isinstance(x, IntegrandPath):
        if x.grid != w.grid:
            raise GridMismatchError("integrand and path grids differ")
        vals = x.values
    else:
        vals = np.asarray(x, dtype=float)
        if vals.shape != (w.grid.step_count,):
            raise GridMismatchError("integrand needs one value per step")
    out = np.empty(w.grid.step_count + 1)
    out[0] = 0.0
    np.cumsum(vals * w.increments(), out=out[1:])
    return SamplePath(w.grid, out, "ito_integral")


def stochastic_exponential(lam: DeterministicFn, w: SamplePath) -> SamplePath:
    """Exponential martingale path Z of the Girsanov density for lam."""
    nodes = w.grid.nodes
    dw_integral = ito_integral(lam(nodes[:-1]), w)
    exponent = -dw_integral.values - 0.5 * lam.square_antiderivative(nodes)
    return SamplePath(w.grid, np.exp(exponent), "Z")


@dataclass(frozen=True)
class GirsanovSpec:
    """A deterministic Girsanov integrand and its per-path derived processes.

    Boundedness of lam on [0, T] (structural for the supported families)
    makes Novikov's condition automatic.
    """

    lam: DeterministicFn

    def z_path(self, w: SamplePath) -> SamplePath:
        return stochastic_exponential(self.lam, w)

    def inverse_z_path(self, w: SamplePath) -> SamplePath:
        z = self.z_path(w)
        return SamplePath(w.grid, 1.0 / z.values, "Lambda")

    def shifted_path(self, w: SamplePath) -> SamplePath:
        return shift_path(w, self.lam)


def gauss_hermite_expectation(fn, mean, variance):
    """E[fn(Y)] for Y ~ N(mean, variance); broadcasts over mean/variance arrays."""
    mean = np.asarray(mean, dtype=float)
    spread = np.sqrt(2.0 * np.asarray(variance, dtype=float))
    out = np.zeros(np.broadcast(mean, spread).shape)
    for u, wgt in zip(_gh_nodes, _gh_weights):
        out += wgt * fn(mean + spread * u)
    return out if out.ndim else float(out)


def _double_factorial(m):
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def _polynomial_cond_exp_coeffs(coeffs, variance):
    """Coefficients of x -> E[f(x + sqrt(variance) Z)] for polynomial f.

    E[(x + s Z)^k] = sum over even j of C(k, j) x^{k-j} s^j (j-1)!!.
    """
    out = np.zeros(len(coeffs))
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        for j in range(0, k + 1, 2):
            out[k - j] += c * math.comb(k, j) * variance ** (j // 2) * _double_factorial(j - 1)
    return out


def cond_exp_heat(payoff: PayoffSpec, t, x_val, horizon) -> float:
    """v(t, x) = E[f(W_T) | W_t = x], by closed form or quadrature."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr >= horizon):
        raise ValueError("conditional expectation requires t < T")
    tau = horizon - t_arr
    x_val = np.asarray(x_val, dtype=float)
    if payoff.kind == INDICATOR:
        out = normal_cdf((x_val - payoff.strike) / np.sqrt(tau))
    elif payoff.kind == POLYNOMIAL:
        if t_arr.ndim == 0:
            c = _polynomial_cond_exp_coeffs(payoff.coeffs, float(tau))
            out = np.polynomial.polynomial.polyval(x_val, c)
        else:
            out = gauss_hermite_expectation(payoff.terminal, x_val, tau)
    else:
        out = gauss_hermite_expectation(payoff.terminal, x_val, tau)
    return out if np.ndim(out) else float(out)


def cond_exp_deriv(payoff: PayoffSpec, t, x_val, horizon) -> float:
    """d/dx of the conditional expectation v(t, x).

    Indicator: the Gaussian kernel at the strike, p(T-t, x-K).  Polynomial:
    exact differentiation of the closed-form polynomial.  Smooth: quadrature
    of f against the x-derivative of the kernel, i.e. E[f(Y) (Y - x)] / tau.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr >= horizon):
        raise ValueError("conditional expectation requires t < T")
    tau = horizon - t_arr
    x_val = np.asarray(x_val, dtype=float)
    if payoff.kind == INDICATOR:
        out = density(tau, x_val, payoff.strike)
    elif payoff.kind == POLYNOMIAL:
        if t_arr.ndim == 0:
            c = _polynomial_cond_exp_coeffs(payoff.coeffs, float(tau))
            out = np.polynomial.polynomial.polyval(
                x_val, np.polynomial.polynomial.polyder(c) if len(c) > 1 else [0.0]
            )
        else:
            out = _gh_deriv(payoff, x_val, tau)
    else:
        out = _gh_deriv(payoff, x_val, tau)
    return out if np.ndim(out) else float(out)


def _gh_deriv(payoff, x_val, tau):
    spread = np.sqrt(2.0 * np.asarray(tau, dtype=float))
    x_val = np.asarray(x_val, dtype=float)
    out = np.zeros(np.broadcast(x_val, spread).shape)
    # d/dx int f(y) p(tau, x, y) dy = int f(y) ((y-x)/tau) p dy
    #   with y = x + spread*u:  (y-x)/tau = sqrt(2/tau) u
    for u, wgt in zip(_gh_nodes, _gh_weights):
        out += wgt * payoff.terminal(x_val + spread * u) * u
    out *= np.sqrt(2.0 / np.asarray(tau, dtype=float))
    return out


def bayes_reweight(f_samples, z_terminal_samples) -> float:
    """Expectation under the changed measure: mean of F * Z_T over P-samples."""
    f_samples = np.asarray(f_samples, dtype=float)
    z_terminal_samples = np.asarray(z_terminal_samples, dtype=float)
    if f_samples.shape != z_terminal_samples.shape:
        raise ValueError("sample arrays must have equal length")
    return float(np.mean(f_samples * z_terminal_samples))
