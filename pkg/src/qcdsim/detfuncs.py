"""Deterministic time functions restricted to closed-form families.

Drift integrands, market coefficients and discount rates are all drawn
from two families -- constant ``c`` and linear ``a + b*t`` -- so that
every integral the package needs (ordinary, squared, tail) is available
in closed form.  Text form is ``"const:c"`` or ``"linear:a,b"``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedFamilyError

CONST = "const"
LINEAR = "linear"


@dataclass(frozen=True)
class DeterministicFn:
    """Scalar deterministic function of time, constant or linear.

    Parameters
    ----------
    family : str
        ``"const"`` or ``"linear"``.
    params : tuple of float
        ``(c,)`` for the constant family, ``(a, b)`` for ``a + b*t``.
    """

    family: str
    params: tuple

    def __post_init__(self):
        if self.family == CONST:
            if len(self.params) != 1:
                raise UnsupportedFamilyError("const family takes exactly one parameter")
        elif self.family == LINEAR:
            if len(self.params) != 2:
                raise UnsupportedFamilyError("linear family takes exactly two parameters")
        else:
            raise UnsupportedFamilyError(f"unknown family {self.family!r}")
        if not all(np.isfinite(p) for p in self.params):
            raise UnsupportedFamilyError("parameters must be finite")

    @classmethod
    def const(cls, c):
        return cls(CONST, (float(c),))

    @classmethod
    def linear(cls, a, b):
        return cls(LINEAR, (float(a), float(b)))

    @classmethod
    def zero(cls):
        return cls.const(0.0)

    @classmethod
    def parse(cls, text):
        """Parse ``"const:c"`` / ``"linear:a,b"`` (bare number means const)."""
        text = text.strip()
        if ":" not in text:
            return cls.const(float(text))
        family, _, arg = text.partition(":")
        family = family.strip().lower()
        parts = [float(p) for p in arg.split(",") if p.strip()]
        if family == CONST:
            if len(parts) != 1:
                raise UnsupportedFamilyError(f"const takes one parameter, got {text!r}")
            return cls.const(parts[0])
        if family == LINEAR:
            if len(parts) != 2:
                raise UnsupportedFamilyError(f"linear takes two parameters, got {text!r}")
            return cls.linear(parts[0], parts[1])
        raise UnsupportedFamilyError(f"unknown family in {text!r}")

    def __call__(self, t):
        """Value at time(s) t; broadcasts over arrays."""
        t = np.asarray(t, dtype=float)
        if self.family == CONST:
            out = np.full_like(t, self.params[0])
        else:
            a, b = self.params
            out = a + b * t
        return out if out.ndim else float(out)

    def antiderivative(self, t):
        """Integral from 0 to t, in closed form."""
        t = np.asarray(t, dtype=float)
        if self.family == CONST:
            out = self.params[0] * t
        else:
            a, b = self.params
            out = a * t + 0.5 * b * t * t
        return out if out.ndim else float(out)

    def integral(self, lo, hi):
        """Integral over [lo, hi]."""
        return self.antiderivative(hi) - self.antiderivative(lo)

    def square_antiderivative(self, t):
        """Integral of the square from 0 to t, in closed form."""
        t = np.asarray(t, dtype=float)
        if self.family == CONST:
            out = self.params[0] ** 2 * t
        else:
            a, b = self.params
            out = a * a * t + a * b * t * t + (b * b / 3.0) * t ** 3
        return out if out.ndim else float(out)

    def square_integral(self, lo, hi):
        return self.square_antiderivative(hi) - self.square_antiderivative(lo)

    def sup_abs(self, horizon):
        """max |f| on [0, horizon]; attained at an endpoint for both families."""
        if self.family == CONST:
            return abs(self.params[0])
        a, b = self.params
        return max(abs(a), abs(a + b * horizon))

    @property
    def is_zero(self):
        return all(p == 0.0 for p in self.params)

    def tag(self):
        """Round-trippable text form."""
        body = ",".join(format(p, ".17g") for p in self.params)
        return f"{self.family}:{body}"

    def minus(self, other):
        """Difference within the families (const/linear closed under subtraction)."""
        a0, b0 = self._as_linear()
        a1, b1 = other._as_linear()
        a, b = a0 - a1, b0 - b1
        return DeterministicFn.const(a) if b == 0.0 else DeterministicFn.linear(a, b)

    def scaled(self, factor):
        if self.family == CONST:
            return DeterministicFn.const(self.params[0] * factor)
        a, b = self.params
        return DeterministicFn.linear(a * factor, b * factor)

    def _as_linear(self):
        if self.family == CONST:
            return self.params[0], 0.0
        return self.params
