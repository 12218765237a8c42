"""Chaos expansion of the Brownian indicator and iterated Ito integrals.

The indicator F = 1{W_T >= K} (W started at x) expands over iterated
integrals on the time simplex with coefficients that are constant in the
time arguments:

    g_0 = Phi((x - K) / sqrt(T)),
    g_n = d^{n-1}/dx^{n-1} p(T, x - K),   n >= 1.

Iterated integrals are discretized by the one-pass recursion

    I^(k)_{i+1} = I^(k)_i + I^(k-1)_i (W_{i+1} - W_i),   I^(0) = c,

costing O(n N) per path.  Because a constant coefficient has
E[J_n(c)^2] = c^2 vol(simplex) = c^2 T^n / n!, the L2 norm identity
||F||^2 = sum_n ||J_n||^2 is checkable without simulation.
"""

from dataclasses import dataclass

import numpy as np

from .detfuncs import DeterministicFn
from .errors import UnsupportedOrderError, UnsupportedPayoffError
from .grid_paths import SamplePath
from .heat_kernel import ORDER_CAP, density_dx, normal_cdf
from .ito_girsanov import cond_exp_heat, gauss_hermite_expectation
from .payoffs import PayoffSpec

GENERAL_NESTING_CAP = 3


def stroock_coeff(n, horizon, start, strike, order_cap=None) -> float:
    """Constant-on-simplex expansion coefficient g_n of the indicator."""
    if n < 0:
        raise UnsupportedOrderError("order must be nonnegative")
    if order_cap is None:
        order_cap = ORDER_CAP
    if n > order_cap:
        raise UnsupportedOrderError(f"order {n} above cap {order_cap}")
    if n == 0:
        return float(normal_cdf((start - strike) / np.sqrt(horizon)))
    return float(density_dx(n - 1, horizon, start, strike, order_cap=order_cap))


def stroock_coeff_com(n, horizon, start, strike, lam: DeterministicFn, order_cap=None) -> float:
    """Coefficient of the expansion in the shifted motion W~.

    The tilde Brownian motion sees the strike displaced by int_0^T lam, so
    the coefficients are the plain ones at that shifted strike.
    """
    shifted = strike + lam.antiderivative(horizon)
    return stroock_coeff(n, horizon, start, shifted, order_cap)


def stroock_coeff_general(spec: PayoffSpec, n, t_nodes) -> float:
    """Expansion coefficient by iterating the derivative of the conditional
    expectation through the heat semigroup (nesting capped at 3).

    Each inner conditional expectation is a martingale evaluated one level
    earlier, so the nested value collapses to the n-th spatial derivative
    of the value function; the outer expectation averages it over the law
    of W at the earliest node.  Constant in t_nodes for catalog payoffs, as
    the representation theory predicts.
    """
    if n < 0:
        raise UnsupportedOrderError("order must be nonnegative")
    if n > GENERAL_NESTING_CAP:
        raise UnsupportedOrderError(f"nesting depth capped at {GENERAL_NESTING_CAP}")
    t_nodes = np.atleast_1d(np.asarray(t_nodes, dtype=float)) if n else np.empty(0)
    if len(t_nodes) != n:
        raise ValueError("need one time node per nesting level")
    if n and (np.any(np.diff(t_nodes) < 0.0) or t_nodes[0] < 0.0 or t_nodes[-1] > spec.horizon):
        raise ValueError("time nodes must be ordered inside [0, T]")
    horizon, x = spec.horizon, spec.start
    if n == 0:
        return float(cond_exp_heat(spec, 0.0, x, horizon))
    t1 = float(t_nodes[0])
    if spec.is_indicator:
        # nested derivative at the earliest node is the (n-1)-th kernel
        # derivative at W_{t1}; average over W_{t1} ~ N(x, t1) by quadrature
        if t1 == 0.0:
            return float(density_dx(n - 1, horizon, x, spec.strike))
        return float(
            gauss_hermite_expectation(
                lambda w: density_dx(n - 1, horizon - t1, w, spec.strike), x, t1
            )
        )
    deriv = spec
    for _ in range(n):
        deriv = deriv.derivative()
    return float(cond_exp_heat(deriv, 0.0, x, horizon))


def _unit_iterated_terminals(dw, n_max) -> np.ndarray:
    """Terminal values of I^(0..n_max) with unit coefficient.

    dw has shape (M, N); the recursion is vectorized over paths and time
    (each order is one shifted cumulative sum).  Returns shape (M, n_max+1).
    """
    n_paths, n_steps = dw.shape
    out = np.empty((n_paths, n_max + 1))
    out[:, 0] = 1.0
    level = np.ones((n_paths, n_steps + 1))
    for k in range(1, n_max + 1):
        nxt = np.empty_like(level)
        nxt[:, 0] = 0.0
        np.cumsum(level[:, :-1] * dw, axis=1, out=nxt[:, 1:])
        level = nxt
        out[:, k] = level[:, -1]
    return out


def iterated_integral_const(c, n, w: SamplePath) -> float:
    """n-fold iterated Ito integral of the constant c over the simplex."""
    if n < 0:
        raise UnsupportedOrderError("order must be nonnegative")
    if n == 0:
        return float(c)
    dw = w.increments()
    level = np.full(w.grid.step_count + 1, float(c))
    for _ in range(n):
        nxt = np.empty_like(level)
        nxt[0] = 0.0
        np.cumsum(level[:-1] * dw, out=nxt[1:])
        level = nxt
    return float(level[-1])


@dataclass(frozen=True)
class ChaosCoefficients:
    """Indicator expansion coefficients g_0..g_{order} with their market data."""

    horizon: float
    start: float
    strike: float
    order: int
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "g", g)
        if g.shape != (self.order + 1,):
            raise ValueError("need one coefficient per order 0..order")

    @classmethod
    def indicator(cls, horizon, start, strike, order, order_cap=None):
        if order_cap is None:
            order_cap = max(ORDER_CAP, order)
        g = np.array(
            [stroock_coeff(n, horizon, start, strike, order_cap) for n in range(order + 1)]
        )
        return cls(float(horizon), float(start), float(strike), int(order), g)


def truncated_chaos(coeffs: ChaosCoefficients, w: SamplePath) -> float:
    """g_0 plus the truncated sum of iterated integrals along one path."""
    terminals = _unit_iterated_terminals(w.increments()[None, :], coeffs.order)[0]
    return float(coeffs.g @ terminals)


def truncated_chaos_ensemble(coeffs: ChaosCoefficients, values_matrix) -> np.ndarray:
    """Truncated chaos sum for every row of a (M, N+1) path matrix."""
    dw = np.diff(np.asarray(values_matrix, dtype=float), axis=1)
    terminals = _unit_iterated_terminals(dw, coeffs.order)
    return terminals @ coeffs.g


def norm_identity(coeffs: ChaosCoefficients, order=None):
    """(partial_sum, target) of the L2 norm identity for the indicator.

    partial_sum = g_0^2 + sum_{n<=order} g_n^2 T^n / n!; the target
    ||F||^2 = E F^2 = E F is the normal CDF at the standardized strike.
    """
    if order is None:
        order = coeffs.order
    if order > coeffs.order:
        raise UnsupportedOrderError("order exceeds the computed coefficients")
    t_pow = coeffs.horizon ** np.arange(order + 1)
    fact = np.cumprod(np.concatenate(([1.0], np.arange(1.0, order + 1))))
    partial = float(np.sum(coeffs.g[: order + 1] ** 2 * t_pow / fact))
    target = float(
        normal_cdf((coeffs.start - coeffs.strike) / np.sqrt(coeffs.horizon))
    )
    return partial, target


def qcd_nth_derivative(n, t, w_t, horizon, strike, order_cap=None) -> float:
    """n-th covariation derivative of the indicator's conditional expectation.

    Equals the (n-1)-th spatial kernel derivative at the running strike
    distance, for every n >= 1; the n = 1 case is the representation
    integrand itself.
    """
    if n < 1:
        raise UnsupportedOrderError("derivative order starts at 1")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr >= horizon):
        raise ValueError("requires t < T")
    if order_cap is None:
        order_cap = max(ORDER_CAP, n - 1)
    out = density_dx(n - 1, horizon - t_arr, w_t, strike, order_cap=order_cap)
    return out if np.ndim(out) else float(out)
