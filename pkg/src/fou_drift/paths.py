"""Uniform grids, sampled paths and the shared ``t,x`` CSV format."""

from __future__ import annotations

import csv
import decimal
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import OverflowDetected

# Enough digits to turn mantissa * 2**exponent into a 17-significant-digit decimal.
_DEC_CTX = decimal.Context(prec=40, Emax=10**9, Emin=-(10**9))


@dataclass(frozen=True)
class UniformGrid:
    """Points ``i * dt`` for ``i = 0..count``; ``count == 0`` is the lone origin."""

    dt: float
    count: int

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}")
        if int(self.count) != self.count or self.count < 0:
            raise ValueError(f"count must be a nonnegative integer, got {self.count!r}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.count + 1) * self.dt

    @property
    def horizon(self) -> float:
        return self.count * self.dt


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A real-valued path on a :class:`UniformGrid`.

    ``values`` has ``grid.count + 1`` entries. When ``exponents`` is given the
    path is in scaled mode and point ``i`` stands for
    ``values[i] * 2**exponents[i]``; this is how explosive fOU paths whose
    magnitude leaves double range are carried around.
    """

    grid: UniformGrid
    values: np.ndarray
    exponents: np.ndarray | None = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size != self.grid.count + 1:
            raise ValueError(
                f"expected {self.grid.count + 1} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise OverflowDetected("path contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.exponents is not None:
            exps = np.array(self.exponents, dtype=np.int64)
            if exps.shape != values.shape:
                raise ValueError("exponents must match values in shape")
            if not exps.any():
                exps = None
            else:
                exps.setflags(write=False)
            object.__setattr__(self, "exponents", exps)

    @classmethod
    def from_values(cls, values, dt: float = 1.0) -> "SampledPath":
        values = np.asarray(values, dtype=float)
        return cls(UniformGrid(dt, values.size - 1), values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def is_scaled(self) -> bool:
        return self.exponents is not None

    def frexp(self) -> tuple[np.ndarray, np.ndarray]:
        """Mantissas in [0.5, 1) (or 0) and integer base-2 exponents."""
        m, e = np.frexp(self.values)
        e = e.astype(np.int64)
        if self.exponents is not None:
            e = e + self.exponents
        return m, e

    def to_numpy(self) -> np.ndarray:
        """Plain float values; raises ``OverflowDetected`` if out of double range."""
        if self.exponents is None:
            return np.array(self.values)
        with np.errstate(over="ignore"):
            out = np.ldexp(self.values, self.exponents)
        if not np.all(np.isfinite(out)):
            raise OverflowDetected("scaled path exceeds double range")
        return out

    def log2_abs_max(self) -> float:
        m, e = self.frexp()
        nz = m != 0
        if not nz.any():
            return -math.inf
        return float(np.max(np.log2(np.abs(m[nz])) + e[nz]))

    def subsample(self, step: int) -> "SampledPath":
        if self.grid.count % step:
            raise ValueError("step must divide the grid count")
        exps = None if self.exponents is None else self.exponents[::step]
        return SampledPath(
            UniformGrid(self.grid.dt * step, self.grid.count // step),
            self.values[::step],
            exps,
        )

    def scaled_by(self, c: float) -> "SampledPath":
        """The path multiplied by ``c`` (exact exponent shift for powers of two)."""
        m, e = math.frexp(c)
        if m == 0.5 and self.exponents is not None:
            return SampledPath(self.grid, self.values, self.exponents + (e - 1))
        if self.exponents is None:
            return SampledPath(self.grid, self.values * c)
        return SampledPath(self.grid, self.values * c, self.exponents)


def _format_value(mantissa: float, exponent: int) -> str:
    if exponent == 0:
        return f"{mantissa:.17g}"
    try:
        v = math.ldexp(mantissa, exponent)
    except OverflowError:
        v = math.inf
    if math.isfinite(v) and (v == 0) == (mantissa == 0) and abs(v) > 1e-300:
        return f"{v:.17g}"
    d = _DEC_CTX.multiply(
        decimal.Decimal(mantissa), _DEC_CTX.power(decimal.Decimal(2), exponent)
    )
    return f"{d:.16e}"


def _parse_value(text: str) -> tuple[float, int]:
    v = float(text)
    if math.isfinite(v) and (v == 0 or abs(v) > 1e-300):
        return v, 0
    d = decimal.Decimal(text)
    if d == 0:
        return 0.0, 0
    e2 = int(math.floor(d.adjusted() * math.log2(10))) - 8
    m = float(_DEC_CTX.divide(d, _DEC_CTX.power(decimal.Decimal(2), e2)))
    return m, e2


def write_path_csv(path: SampledPath, target) -> None:
    """Write ``t,x`` rows with 17 significant digits.

    Values beyond double range (scaled paths) are written as decimal
    scientific notation, which :func:`read_path_csv` maps back to scaled form.
    """
    exps = path.exponents if path.exponents is not None else np.zeros(len(path), np.int64)
    times = path.times
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x"])
        for t, m, e in zip(times, path.values, exps):
            w.writerow([f"{t:.17g}", _format_value(float(m), int(e))])


def read_path_csv(source, rtol: float = 1e-9) -> SampledPath:
    source = Path(source)
    with open(source, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "x"]:
            raise ValueError(f"{source}: expected header 't,x'")
        ts, ms, es = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{source}: malformed row {row!r}")
            ts.append(float(row[0]))
            m, e = _parse_value(row[1].strip())
            ms.append(m)
            es.append(e)
    if len(ts) < 2:
        raise ValueError(f"{source}: need at least two rows")
    t = np.asarray(ts)
    if t[0] != 0:
        raise ValueError(f"{source}: grid must start at t=0")
    count = t.size - 1
    dt = t[-1] / count
    if not np.allclose(t, np.arange(count + 1) * dt, rtol=rtol, atol=rtol * dt):
        raise ValueError(f"{source}: grid is not uniform")
    return SampledPath(UniformGrid(dt, count), np.asarray(ms), np.asarray(es))
