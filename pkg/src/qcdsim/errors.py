"""Exception types shared across the package.

All inherit ValueError so argument-validation failures can be caught
uniformly at the CLI boundary.
"""


class GridMismatchError(ValueError):
    """Two paths that must share a time grid do not."""


class OutOfWindowError(ValueError):
    """Estimator window sticks out of the simulated horizon."""


class WindowTooSmallError(ValueError):
    """Smoothing window covers fewer than two grid steps."""


class CutoffError(ValueError):
    """Evaluation time lies past the near-expiry cutoff T - eps."""


class UnsupportedOrderError(ValueError):
    """Derivative / expansion order above the configured cap."""


class UnsupportedFamilyError(ValueError):
    """Deterministic function outside the constant/linear families."""


class UnsupportedPayoffError(ValueError):
    """Payoff outside the supported catalog for the requested operation."""
