"""Time grids, Brownian path simulation, and reproducible random streams.

Reproducibility contract
------------------------
Path ``i`` of an ensemble with seed ``s`` is generated from a Philox
counter-based stream keyed by the 128-bit pair ``(s, i)``.  Uniform
variates from that stream are mapped to Gaussians through the inverse
normal CDF (``scipy.special.ndtri``).  Both pieces are fixed, documented
algorithms, so a given ``(seed, M, N, T, x)`` reproduces bit-identical
ensembles on any platform and under any worker count: each path's stream
is independent of every other path's, so generation order cannot matter.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtri

from .detfuncs import DeterministicFn

_MASK64 = (1 << 64) - 1
# ndtri(0) = -inf; the generator yields u in [0, 1), so clip the zero case.
_U_FLOOR = 1e-300


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_N = T with dt = T / N.

    Nodes are materialized as ``i * dt`` (not running sums) so the last
    node equals T to within one ulp.
    """

    horizon: float
    step_count: int

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ValueError("horizon T must be positive")
        if self.step_count < 2:
            raise ValueError("step_count N must be at least 2")

    @property
    def dt(self) -> float:
        return self.horizon / self.step_count

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.step_count + 1) * self.dt

    def node_index(self, t, tol=None):
        """Index of the grid node nearest to time t.

        Raises ValueError when t is further from the nearest node than
        ``tol`` (default: half a step), i.e. t is not a grid time.
        """
        if tol is None:
            tol = 0.5 * self.dt
        i = int(round(t / self.dt))
        if i < 0 or i > self.step_count or abs(t - i * self.dt) > tol:
            raise ValueError(f"t={t} is not a node of the grid")
        return i


@dataclass(frozen=True)
class SamplePath:
    """Process values at every node of a grid, tagged with an identity label."""

    grid: TimeGrid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.step_count + 1,):
            raise ValueError(
                f"values length {values.shape} does not match grid "
                f"({self.grid.step_count + 1} nodes)"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


@dataclass(frozen=True)
class PathEnsemble:
    """M sample paths on a shared grid, with the seed that generated them.

    ``values`` has shape (M, N+1); row i is path i.  Ensembles are
    immutable after construction and safe to share across threads.
    """

    grid: TimeGrid
    values: np.ndarray
    seed: int
    start: float = 0.0
    label: str = "W"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != self.grid.step_count + 1:
            raise ValueError("ensemble values must have shape (M, N+1)")

    def __len__(self):
        return self.values.shape[0]

    def path(self, i) -> SamplePath:
        return SamplePath(self.grid, self.values[i], f"{self.label}[{i}]")

    def __iter__(self):
        return (self.path(i) for i in range(len(self)))

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1]


def make_uniform_grid(horizon, step_count) -> TimeGrid:
    """Uniform grid on [0, T] with N steps; T > 0 and N >= 2 required."""
    return TimeGrid(float(horizon), int(step_count))


def _stream(seed, index):
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_increments(seed, index, n_steps, dt) -> np.ndarray:
    """The n Gaussian increments (variance dt) of path ``index`` under ``seed``."""
    u = _stream(seed, index).random(n_steps)
    return np.sqrt(dt) * ndtri(np.maximum(u, _U_FLOOR))


def brownian_path(grid, seed, index=0, start=0.0) -> SamplePath:
    """Single Brownian path; identical to row ``index`` of the full ensemble."""
    values = np.empty(grid.step_count + 1)
    values[0] = start
    values[1:] = start + np.cumsum(gaussian_increments(seed, index, grid.step_count, grid.dt))
    return SamplePath(grid, values, "W")


def simulate_brownian(grid, n_paths, seed, start=0.0, workers=None) -> PathEnsemble:
    """Simulate an ensemble of Brownian paths with W_0 = start.

    Parameters
    ----------
    grid : TimeGrid
    n_paths : int
        Number of paths M >= 1.
    seed : int
        Master seed; path i uses the stream keyed (seed, i).
    start : float
        Common starting value x.
    workers : int, optional
        Thread count for generation.  Has no effect on the output values
        (streams are per-path), only on wall time.
    """
    n_paths = int(n_paths)
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    n, dt = grid.step_count, grid.dt
    values = np.empty((n_paths, n + 1))
    values[:, 0] = start

    def fill(i):
        values[i, 1:] = start + np.cumsum(gaussian_increments(seed, i, n, dt))

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_paths)))
    else:
        for i in range(n_paths):
            fill(i)
    return PathEnsemble(grid, values, seed=int(seed), start=float(start))


def shift_path(w: SamplePath, lam: DeterministicFn) -> SamplePath:
    """Translated path W~_t = W_t + int_0^t lam(u) du, integral in closed form."""
    shift = lam.antiderivative(w.grid.nodes)
    return SamplePath(w.grid, w.values + shift, f"{w.label}_tilde" if w.label else "W_tilde")


def dump_paths_csv(ensemble: PathEnsemble, fh, digits=17) -> None:
    """Write ``path_id,t,value`` rows, one per node per path."""
    fmt = f"%.{digits}g"
    fh.write("path_id,t,value\n")
    nodes = ensemble.grid.nodes
    for i in range(len(ensemble)):
        row = ensemble.values[i]
        for t, v in zip(nodes, row):
            fh.write(f"{i},{fmt % t},{fmt % v}\n")
