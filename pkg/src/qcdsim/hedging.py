"""Replication of the digital payoff 1{W_T >= K} in a lognormal market.

The stock follows dP = b P dt + a P dW with deterministic continuous
coefficients, the rate r is deterministic, and the market price of risk
lam = (b - r)/a drives the change to the pricing measure.  The number of
shares held is

    Delta_t = exp(-int_t^T r) a_t^{-1} P_t^{-1} p(T - t, W_t - int_t^T lam - K),

which is exactly the change-of-measure representation integrand rescaled:
D_T * (tilde integrand) = Delta_t a_t D_t P_t.  The backtest trades on the
shifted-path increments dW~ built from the same simulated W, so a single
P-ensemble serves both measures; discounts are closed-form, never
quadrature.  The digital delta explodes at the strike near expiry, so the
held position stops updating at the last rebalance node at or before
T - eps (same cutoff policy as the representation module).

The payoff is written on the driving motion W_T, not on the stock, so the
strike never needs reinterpreting in price terms.
"""

from dataclasses import dataclass

import numpy as np

from .clark_ocone import default_eps
from .detfuncs import DeterministicFn
from .errors import UnsupportedFamilyError
from .grid_paths import PathEnsemble, SamplePath
from .heat_kernel import density, normal_cdf


@dataclass(frozen=True)
class MarketSpec:
    """Market coefficients (constant/linear families), strike, and horizon.

    Parameters
    ----------
    drift, volatility, rate : DeterministicFn
        b(t), a(t), r(t).  The volatility must be bounded away from zero
        on [0, T]; with deterministic bounded coefficients Novikov's
        condition holds automatically.
    strike : float
        Digital strike K > 0, written on the driving motion W_T.
    horizon : float
        Maturity T.
    initial_price : float
        P_0 > 0.
    start : float
        Starting point x of the driving motion.
    """

    drift: DeterministicFn
    volatility: DeterministicFn
    rate: DeterministicFn
    strike: float
    horizon: float
    initial_price: float = 1.0
    start: float = 0.0

    def __post_init__(self):
        if not self.strike > 0.0:
            raise ValueError("strike K must be positive")
        if not self.horizon > 0.0:
            raise ValueError("horizon T must be positive")
        if not self.initial_price > 0.0:
            raise ValueError("initial price P_0 must be positive")
        a0 = float(self.volatility(0.0))
        aT = float(self.volatility(self.horizon))
        if a0 == 0.0 or aT == 0.0 or a0 * aT < 0.0:
            raise ValueError("volatility must be bounded away from zero on [0, T]")

    def lambda_fn(self) -> DeterministicFn:
        """Market price of risk as a closed-form family member.

        (b - r)/a stays in the constant/linear families when either b == r
        (lam identically zero) or a is constant; other combinations have no
        closed-form integral and are rejected.
        """
        excess = self.drift.minus(self.rate)
        if excess.is_zero:
            return DeterministicFn.zero()
        if self.volatility.family == "const":
            return excess.scaled(1.0 / self.volatility.params[0])
        raise UnsupportedFamilyError(
            "market price of risk needs constant volatility (or drift == rate)"
        )

    def discount(self, t):
        """D_t = exp(-int_0^t r), exact."""
        return np.exp(-self.rate.antiderivative(t))

    def discount_tail(self, t):
        """exp(-int_t^T r), exact."""
        return np.exp(-self.rate.integral(t, self.horizon))


def market_price_of_risk(market: MarketSpec, t) -> float:
    """Pointwise lam(t) = (b(t) - r(t)) / a(t)."""
    a = market.volatility(t)
    if np.any(np.asarray(a) == 0.0):
        raise ValueError("volatility vanishes at the requested time")
    out = (market.drift(t) - market.rate(t)) / a
    return out if np.ndim(out) else float(out)


def simulate_stock(market: MarketSpec, w: SamplePath) -> SamplePath:
    """Exact log-Euler stock path driven by a given Brownian path.

    P_{i+1} = P_i exp((b - a^2/2) dt + a dW), coefficients at the left
    node; exact in law for constant coefficients.
    """
    t_left = w.times[:-1]
    b = np.asarray(market.drift(t_left), dtype=float)
    a = np.asarray(market.volatility(t_left), dtype=float)
    log_increments = (b - 0.5 * a * a) * w.grid.dt + a * w.increments()
    values = np.empty(w.grid.step_count + 1)
    values[0] = market.initial_price
    values[1:] = market.initial_price * np.exp(np.cumsum(log_increments))
    return SamplePath(w.grid, values, "P")


def delta_digital(market: MarketSpec, t, w_t, p_t, eps=None) -> float:
    """Replicating share count for the digital payoff at (t, W_t, P_t)."""
    if eps is None:
        eps = default_eps(market.horizon)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > market.horizon - eps):
        raise ValueError(f"delta defined for t <= T - eps = {market.horizon - eps}")
    p_arr = np.asarray(p_t, dtype=float)
    if np.any(p_arr <= 0.0):
        raise ValueError("stock price must be positive")
    lam = market.lambda_fn()
    tail = lam.integral(t_arr, market.horizon)
    a = np.asarray(market.volatility(t_arr), dtype=float)
    kernel = density(market.horizon - t_arr, np.asarray(w_t, dtype=float) - tail, market.strike)
    out = market.discount_tail(t_arr) / (a * p_arr) * kernel
    return out if np.ndim(out) else float(out)


def initial_capital(market: MarketSpec) -> float:
    """Risk-neutral price paid at time 0: E~[D_T V_T] / D_0."""
    lam = market.lambda_fn()
    shift = lam.antiderivative(market.horizon)
    price_tilde = normal_cdf(
        (market.start - shift - market.strike) / np.sqrt(market.horizon)
    )
    return float(market.discount(market.horizon) * price_tilde / market.discount(0.0))


@dataclass(frozen=True)
class HedgeRun:
    """Full record of one replication backtest."""

    stock: SamplePath
    wealth: SamplePath
    delta: SamplePath
    discount: np.ndarray
    payoff: float
    initial: float
    terminal_error: float


def _rebalance_schedule(grid, rebalance_every, horizon, eps):
    """Step index -> rebalance node whose delta is held, cutoff applied.

    Rebalance nodes past T - eps reuse the delta of the last node at or
    before the cutoff, freezing the position near expiry.
    """
    n = grid.step_count
    rebalance_every = int(rebalance_every)
    if rebalance_every < 1 or n % rebalance_every:
        raise ValueError("rebalance nodes must form a sub-grid of the simulation grid")
    reb = np.arange(0, n, rebalance_every)
    t_reb = grid.nodes[reb]
    valid = t_reb <= horizon - eps
    last_valid = int(np.nonzero(valid)[0][-1])
    reb_eff = np.where(valid, reb, reb[last_valid])
    return reb, reb_eff


def _held_deltas(market, w_matrix, stock_left, grid, rebalance_every, eps):
    """Delta held on each grid step, shape like w_matrix[:, :-1]."""
    reb, reb_eff = _rebalance_schedule(grid, rebalance_every, market.horizon, eps)
    t_eff = grid.nodes[reb_eff]
    lam = market.lambda_fn()
    tail = lam.integral(t_eff, market.horizon)
    a_eff = np.asarray(market.volatility(t_eff), dtype=float)
    kernel = density(
        market.horizon - t_eff, w_matrix[..., reb_eff] - tail, market.strike
    )
    held_reb = market.discount_tail(t_eff) / (a_eff * stock_left[..., reb_eff]) * kernel
    return np.repeat(held_reb, rebalance_every, axis=-1)


def run_hedge(
    market: MarketSpec, w: SamplePath, rebalance_every=1, eps=None, forced_delta=None
) -> HedgeRun:
    """Backtest the replication along one driving path.

    The portfolio starts from the risk-neutral price, holds Delta constant
    between rebalance nodes (a sub-grid of the simulation grid), and its
    discounted wealth accrues left-endpoint sums of Delta a D P against the
    shifted-path increments.  terminal_error = D_T X_T - D_T V_T.

    ``forced_delta`` overrides the formula with a constant share count
    (diagnostic mode; 0.0 gives the no-trading baseline).
    """
    if eps is None:
        eps = default_eps(market.horizon)
    n = w.grid.step_count
    nodes = w.times
    stock = simulate_stock(market, w)
    if forced_delta is None:
        held = _held_deltas(
            market, w.values[None, :], stock.values[None, :-1], w.grid, rebalance_every, eps
        )[0]
    else:
        _rebalance_schedule(w.grid, rebalance_every, market.horizon, eps)
        held = np.full(n, float(forced_delta))

    lam = market.lambda_fn()
    a_left = np.asarray(market.volatility(nodes[:-1]), dtype=float)
    discount = market.discount(nodes)
    dw_tilde = w.increments() + (
        lam.antiderivative(nodes[1:]) - lam.antiderivative(nodes[:-1])
    )
    x0 = initial_capital(market)
    gains = held * a_left * discount[:-1] * stock.values[:-1] * dw_tilde
    discounted_wealth = np.empty(n + 1)
    discounted_wealth[0] = market.discount(0.0) * x0
    discounted_wealth[1:] = discounted_wealth[0] + np.cumsum(gains)
    payoff = float(w.values[-1] >= market.strike)
    terminal_error = float(discounted_wealth[-1] - discount[-1] * payoff)
    delta_path = np.concatenate((held, held[-1:]))
    return HedgeRun(
        stock=stock,
        wealth=SamplePath(w.grid, discounted_wealth / discount, "X"),
        delta=SamplePath(w.grid, delta_path, "Delta"),
        discount=discount,
        payoff=payoff,
        initial=x0,
        terminal_error=terminal_error,
    )


def terminal_errors(market: MarketSpec, ensemble: PathEnsemble, rebalance_every, eps=None) -> np.ndarray:
    """Vectorized terminal replication errors D_T X_T - D_T V_T per path."""
    if eps is None:
        eps = default_eps(market.horizon)
    grid = ensemble.grid
    nodes = grid.nodes
    w_vals = ensemble.values
    dw = np.diff(w_vals, axis=1)
    t_left = nodes[:-1]
    b = np.asarray(market.drift(t_left), dtype=float)
    a = np.asarray(market.volatility(t_left), dtype=float)
    log_inc = (b - 0.5 * a * a) * grid.dt + a * dw
    stock_left = np.empty_like(w_vals[:, :-1])
    stock_left[:, 0] = market.initial_price
    stock_left[:, 1:] = market.initial_price * np.exp(np.cumsum(log_inc, axis=1))[:, :-1]

    held = _held_deltas(market, w_vals, stock_left, grid, rebalance_every, eps)
    lam = market.lambda_fn()
    discount_left = market.discount(t_left)
    dw_tilde = dw + (lam.antiderivative(nodes[1:]) - lam.antiderivative(nodes[:-1]))
    gains = np.sum(held * a * discount_left * stock_left * dw_tilde, axis=1)
    x0 = initial_capital(market)
    payoff = (w_vals[:, -1] >= market.strike).astype(float)
    d_terminal = market.discount(market.horizon)
    return market.discount(0.0) * x0 + gains - d_terminal * payoff


def hedge_report(market: MarketSpec, ensemble: PathEnsemble, frequencies, eps=None):
    """L2 / 95th-quantile / mean terminal errors per rebalance frequency.

    ``frequencies`` counts rebalances per horizon; each must divide the
    grid step count.  Returns a list of dict rows, deterministic for a
    fixed ensemble.
    """
    n = ensemble.grid.step_count
    rows = []
    for freq in frequencies:
        freq = int(freq)
        if freq < 1 or n % freq:
            raise ValueError(f"frequency {freq} does not divide the grid ({n} steps)")
        err = terminal_errors(market, ensemble, n // freq, eps)
        rows.append(
            {
                "frequency": freq,
                "l2_error": float(np.sqrt(np.mean(err ** 2))),
                "q95_error": float(np.quantile(np.abs(err), 0.95)),
                "mean_error": float(np.mean(err)),
            }
        )
    return rows
