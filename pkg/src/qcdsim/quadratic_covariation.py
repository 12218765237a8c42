"""Pathwise quadratic covariation and the two derivative estimators.

The covariation <S,W> is estimated by cumulative sums of products of
forward increments on the simulation grid.  Its time derivative -- the
derivative of S with respect to W -- is estimated two ways:

* strong: symmetric difference quotient of the covariation over a
  window of k grid steps,
  (<S,W>_{t+k dt} - <S,W>_{t-k dt}) / (2 k dt);
* smoothed: the weighted window average
  (3 / 2h^3) * int_0^h r [<S,W>_{t+r} - <S,W>_{t-r}] dr   (t > 0),
  (3 / h^3)  * int_0^h r <S,W>_r dr                       (t = 0),
  with the integral done by composite Simpson on the grid nodes.

The raw per-step difference quotient of the covariation has O(1)
variance; a window of k steps trades O(k dt) bias for O(dt/(k dt))
variance, so the default k keeps k*dt near sqrt(dt).
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import GridMismatchError, OutOfWindowError, WindowTooSmallError
from .grid_paths import SamplePath, TimeGrid


@dataclass(frozen=True)
class QcovPath:
    """Cumulative covariation estimate <S,W>_t at every grid node."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.step_count + 1,):
            raise ValueError("covariation values must have one entry per node")
        if values[0] != 0.0:
            raise ValueError("covariation starts at zero")


@dataclass(frozen=True)
class QcdEstimatorConfig:
    """Estimator windows: h (time units, smoothed) and k (grid steps, strong)."""

    window: float = 0.05
    half_width: int = 64

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError("half_width k must be at least 1")
        if not self.window > 0.0:
            raise ValueError("window h must be positive")

    def validate(self, grid: TimeGrid):
        if self.window < 2.0 * grid.dt:
            raise WindowTooSmallError("window h must cover at least two grid steps")
        if self.half_width * grid.dt >= grid.horizon / 2.0:
            raise OutOfWindowError("k*dt must stay below T/2")


def default_config(grid: TimeGrid) -> QcdEstimatorConfig:
    """k with k*dt ~ sqrt(dt), h covering the same span (at least 2 steps)."""
    k = max(1, round(np.sqrt(grid.step_count / grid.horizon)))
    h = max(2 * grid.dt, k * grid.dt)
    return QcdEstimatorConfig(window=h, half_width=k)


def _require_shared_grid(x: SamplePath, y: SamplePath):
    if x.grid != y.grid:
        raise GridMismatchError("paths live on different grids")


def qcov(x: SamplePath, y: SamplePath) -> QcovPath:
    """Covariation path: cumulative sums of products of forward increments."""
    _require_shared_grid(x, y)
    products = x.increments() * y.increments()
    values = np.empty(x.grid.step_count + 1)
    values[0] = 0.0
    np.cumsum(products, out=values[1:])
    return QcovPath(x.grid, values)


def qcd_strong_from_qcov(q: QcovPath, t, half_width) -> float:
    """Symmetric difference quotient of a covariation path at node t."""
    grid = q.grid
    i = grid.node_index(t)
    k = int(half_width)
    if i - k < 0 or i + k > grid.step_count:
        raise OutOfWindowError(
            f"node {i} with half-width {k} leaves the grid [0, {grid.step_count}]"
        )
    span = 2.0 * k * grid.dt
    return float((q.values[i + k] - q.values[i - k]) / span)


def qcd_strong(s: SamplePath, w: SamplePath, t, cfg: QcdEstimatorConfig) -> float:
    """Strong derivative estimate d<S,W>/dt at an interior node."""
    cfg.validate(s.grid)
    return qcd_strong_from_qcov(qcov(s, w), t, cfg.half_width)


def qcd_smoothed_from_qcov(q: QcovPath, t, window) -> float:
    """Smoothed-difference derivative estimate on a covariation path.

    The window is snapped to a whole number of grid steps (m = round(h/dt),
    m >= 2) and the normalization uses the snapped width, so the quadrature
    nodes coincide with grid nodes.
    """
    grid = q.grid
    m = int(round(window / grid.dt))
    if m < 2:
        raise WindowTooSmallError("window h must cover at least two grid steps")
    h = m * grid.dt
    i = grid.node_index(t)
    r = np.arange(m + 1) * grid.dt
    if i == 0:
        if m > grid.step_count:
            raise OutOfWindowError("window exceeds the horizon")
        integrand = r * q.values[: m + 1]
        return float(3.0 / h ** 3 * simpson(integrand, x=r))
    if i - m < 0 or i + m > grid.step_count:
        raise OutOfWindowError("window h must fit inside [0, min(t, T - t)]")
    up = q.values[i : i + m + 1]
    down = q.values[i - m : i + 1][::-1]
    integrand = r * (up - down)
    return float(1.5 / h ** 3 * simpson(integrand, x=r))


def qcd_smoothed(s: SamplePath, w: SamplePath, t, window) -> float:
    """Smoothed derivative estimate of S against W at a grid time."""
    return qcd_smoothed_from_qcov(qcov(s, w), t, window)


def qcd_profile(s: SamplePath, w: SamplePath, cfg: QcdEstimatorConfig):
    """Strong estimate at every node.

    Returns ``(path, boundary)``: boundary nodes (within k of either end)
    carry the nearest interior estimate and are flagged True so reports can
    exclude them.
    """
    cfg.validate(s.grid)
    q = qcov(s, w)
    k = cfg.half_width
    n = s.grid.step_count
    span = 2.0 * k * s.grid.dt
    interior = (q.values[2 * k :] - q.values[: n + 1 - 2 * k]) / span
    values = np.empty(n + 1)
    values[k : n + 1 - k] = interior
    values[:k] = interior[0]
    values[n + 1 - k :] = interior[-1]
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[:k] = True
    boundary[n + 1 - k :] = True
    return SamplePath(s.grid, values, "qcd_profile"), boundary
