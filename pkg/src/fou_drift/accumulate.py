"""Sums carried as ``mantissa * 2**exponent2``.

Terms arrive as ``(mantissa, exponent)`` pairs; a fold aligns every term to
the largest exponent present (terms more than ~1074 binades below it vanish,
as they would in any double sum), adds them in the given order with numpy's
pairwise reduction, and renormalises whenever ``|mantissa| >= 2**512``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OverflowDetected, ZeroDenominator

LIMIT = 2.0**512


@dataclass
class ScaledAccumulator:
    mantissa: float = 0.0
    exponent2: int = 0

    def _normalize(self) -> None:
        if abs(self.mantissa) >= LIMIT:
            m, e = math.frexp(self.mantissa)
            self.mantissa = m
            self.exponent2 += e

    def add(self, mantissa: float, exponent2: int = 0) -> "ScaledAccumulator":
        return self.add_terms(np.array([mantissa], dtype=float), np.array([exponent2]))

    def add_terms(self, mantissas, exponents=None) -> "ScaledAccumulator":
        m = np.asarray(mantissas, dtype=float)
        if exponents is None:
            e = np.zeros(m.shape, dtype=np.int64)
        else:
            e = np.asarray(exponents, dtype=np.int64)
        nz = m != 0
        if not nz.any():
            return self
        if not np.all(np.isfinite(m)):
            raise OverflowDetected("non-finite term")
        top = int(e[nz].max())
        if self.mantissa != 0:
            top = max(top, self.exponent2)
        shifts = np.clip(e - top, -2000, 0)
        total = float(np.sum(np.ldexp(m, shifts)))
        own = math.ldexp(self.mantissa, max(self.exponent2 - top, -2000)) if self.mantissa else 0.0
        self.mantissa = own + total
        self.exponent2 = top
        self._normalize()
        return self

    def __add__(self, other: "ScaledAccumulator") -> "ScaledAccumulator":
        out = ScaledAccumulator(self.mantissa, self.exponent2)
        return out.add(other.mantissa, other.exponent2)

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def value(self) -> float:
        try:
            return math.ldexp(self.mantissa, self.exponent2)
        except OverflowError:
            raise OverflowDetected(
                f"accumulated value 2**{self.log2_abs():.1f} exceeds double range"
            ) from None

    def log2_abs(self) -> float:
        if self.mantissa == 0:
            return -math.inf
        return math.log2(abs(self.mantissa)) + self.exponent2

    def ratio(self, other: "ScaledAccumulator", scale: float = 1.0) -> float:
        """``self / (scale * other)`` without leaving double range in between."""
        if other.mantissa == 0:
            raise ZeroDenominator("denominator sums to zero")
        fa, ea = math.frexp(self.mantissa)
        fb, eb = math.frexp(other.mantissa)
        q = fa / (scale * fb)
        try:
            out = math.ldexp(q, (ea + self.exponent2) - (eb + other.exponent2))
        except OverflowError:
            raise OverflowDetected("ratio exceeds double range") from None
        return out
