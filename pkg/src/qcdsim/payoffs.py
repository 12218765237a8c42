"""Terminal payoff catalog: indicator, polynomial, and smooth entries.

Catalog membership is the admissibility check: every entry is either
bounded or of polynomial growth, hence square integrable against the
Gaussian terminal law.  Text forms: ``indicator:K``, ``poly:c0,c1,...``,
``sin``, ``cos``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedPayoffError

INDICATOR = "indicator"
POLYNOMIAL = "polynomial"
SMOOTH = "smooth"

# name -> (function, name of derivative); the cycle is closed under d/dx.
_SMOOTH_CATALOG = {
    "sin": (np.sin, "cos"),
    "cos": (np.cos, "neg_sin"),
    "neg_sin": (lambda y: -np.sin(y), "neg_cos"),
    "neg_cos": (lambda y: -np.cos(y), "sin"),
}


@dataclass(frozen=True)
class PayoffSpec:
    """Payoff F = f(W_T) plus the horizon T and start point x of the run."""

    kind: str
    horizon: float = 1.0
    start: float = 0.0
    strike: float = 0.0
    coeffs: tuple = ()
    name: str = ""

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if self.kind == INDICATOR:
            if not np.isfinite(self.strike):
                raise UnsupportedPayoffError("indicator requires a finite strike")
        elif self.kind == POLYNOMIAL:
            if len(self.coeffs) == 0:
                raise UnsupportedPayoffError("polynomial requires coefficients")
        elif self.kind == SMOOTH:
            if self.name not in _SMOOTH_CATALOG:
                raise UnsupportedPayoffError(
                    f"smooth payoff {self.name!r} not in catalog {sorted(_SMOOTH_CATALOG)}"
                )
        else:
            raise UnsupportedPayoffError(f"unknown payoff kind {self.kind!r}")

    @classmethod
    def indicator(cls, strike, horizon=1.0, start=0.0):
        return cls(INDICATOR, horizon, start, strike=float(strike))

    @classmethod
    def polynomial(cls, coeffs, horizon=1.0, start=0.0):
        return cls(POLYNOMIAL, horizon, start, coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def smooth(cls, name, horizon=1.0, start=0.0):
        return cls(SMOOTH, horizon, start, name=name)

    @classmethod
    def parse(cls, text, horizon=1.0, start=0.0):
        text = text.strip()
        head, _, arg = text.partition(":")
        head = head.strip().lower()
        if head == INDICATOR:
            return cls.indicator(float(arg), horizon, start)
        if head == "poly":
            coeffs = [float(c) for c in arg.split(",") if c.strip()]
            return cls.polynomial(coeffs, horizon, start)
        if head in _SMOOTH_CATALOG:
            return cls.smooth(head, horizon, start)
        raise UnsupportedPayoffError(f"cannot parse payoff {text!r}")

    @property
    def is_indicator(self):
        return self.kind == INDICATOR

    def terminal(self, w_T):
        """F = f(W_T), vectorized over terminal values."""
        w_T = np.asarray(w_T, dtype=float)
        if self.kind == INDICATOR:
            out = (w_T >= self.strike).astype(float)
        elif self.kind == POLYNOMIAL:
            out = np.polynomial.polynomial.polyval(w_T, self.coeffs)
        else:
            out = _SMOOTH_CATALOG[self.name][0](w_T)
        return out if np.ndim(out) else float(out)

    def derivative(self):
        """Payoff whose mapping is f'; undefined for the indicator."""
        if self.kind == POLYNOMIAL:
            der = np.polynomial.polynomial.polyder(self.coeffs)
            der = tuple(der) if len(der) else (0.0,)
            return PayoffSpec.polynomial(der, self.horizon, self.start)
        if self.kind == SMOOTH:
            return PayoffSpec.smooth(_SMOOTH_CATALOG[self.name][1], self.horizon, self.start)
        raise UnsupportedPayoffError("indicator payoff has no pointwise derivative")

    def tag(self):
        if self.kind == INDICATOR:
            return f"indicator:{self.strike:.17g}"
        if self.kind == POLYNOMIAL:
            return "poly:" + ",".join(format(c, ".17g") for c in self.coeffs)
        return self.name
