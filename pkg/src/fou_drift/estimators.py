"""Drift estimators on discretely observed paths.

All sums run in ascending time order through :class:`ScaledAccumulator`, so
the estimators work unchanged on scaled (beyond double range) paths and are
bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .accumulate import ScaledAccumulator
from .errors import MissingDriver, OverflowDetected, ZeroDenominator
from .fbm import check_hurst
from .fou import FouParams, GridSpec, SimulatedPair
from .paths import SampledPath

METHODS = ("theta-hat", "lse", "terminal", "hu-song")


@dataclass(frozen=True)
class Estimate:
    value: float
    method: str
    n: int | None
    m: float | None
    h_used: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not math.isfinite(self.value):
            raise OverflowDetected(f"{self.method} estimate is not finite")
        if self.method == "hu-song" and self.h_used is None:
            raise ValueError("hu-song estimates carry the Hurst index used")

    def to_dict(self) -> dict:
        out = {"method": self.method, "value": self.value, "n": self.n}
        if self.m is not None:
            out["m"] = self.m
        if self.h_used is not None:
            out["h_used"] = self.h_used
        return out


def _check_delta(path: SampledPath, delta: float) -> None:
    if len(path) < 2:
        raise ValueError("need at least two observations")
    if not math.isclose(path.grid.dt, delta, rel_tol=1e-9):
        raise ValueError(f"path step {path.grid.dt!r} does not match delta {delta!r}")


def _horizon_exponent(steps: int, n: int | None) -> float | None:
    if n is None or n < 2:
        return None
    return math.log(steps) / math.log(n)


def _cross_and_square_sums(path: SampledPath):
    """``sum_k X_k (X_{k+1} - X_k)`` and ``sum_k X_k**2`` over ``k < count``."""
    m, e = path.frexp()
    top = np.maximum(e[:-1], e[1:])
    xk = np.ldexp(m[:-1], e[:-1] - top)
    xk1 = np.ldexp(m[1:], e[1:] - top)
    cross = ScaledAccumulator().add_terms(xk * (xk1 - xk), 2 * top)
    square = ScaledAccumulator().add_terms(m[:-1] * m[:-1], 2 * e[:-1])
    return cross, square


def theta_lse(path: SampledPath, delta: float) -> Estimate:
    """Discretised least-squares estimator
    ``sum X_{i-1}(X_i - X_{i-1}) / (delta sum X_{i-1}**2)``."""
    _check_delta(path, delta)
    cross, square = _cross_and_square_sums(path)
    n = round(1 / delta) if math.isclose(1 / delta, round(1 / delta)) else None
    return Estimate(cross.ratio(square, delta), "lse", n, _horizon_exponent(path.grid.count, n))


def theta_hat(path: SampledPath, n: int) -> Estimate:
    """``sum X_k dX_k / ((1/n) sum X_k**2)`` over ``k = 0..count-1``.

    Identical to :func:`theta_lse` with ``delta = 1/n``; raises
    ``ZeroDenominator`` when every ``X_k`` (``k < count``) is zero.
    """
    est = theta_lse(path, 1.0 / n)
    return Estimate(est.value, "theta-hat", n, _horizon_exponent(path.grid.count, n))


def theta_terminal(path: SampledPath, delta: float) -> Estimate:
    """``X_N**2 / (2 delta sum_{i<N} X_i**2)``; nonnegative, for explosive paths."""
    _check_delta(path, delta)
    m, e = path.frexp()
    top = ScaledAccumulator().add(m[-1] * m[-1], 2 * int(e[-1]))
    square = ScaledAccumulator().add_terms(m[:-1] * m[:-1], 2 * e[:-1])
    n = round(1 / delta) if math.isclose(1 / delta, round(1 / delta)) else None
    return Estimate(top.ratio(square, 2 * delta), "terminal", n, _horizon_exponent(path.grid.count, n))


def theta_hu_song(path: SampledPath, delta: float, h: float) -> Estimate:
    """Ergodic-case estimator ``-(sum_{k=1}^N X_k**2 / (N H Gamma(2H)))**(-1/(2H))``.

    Uses the observations after the initial value. Multiplying the path by
    ``c`` multiplies the estimate by ``|c|**(-1/H)``.
    """
    _check_delta(path, delta)
    h = check_hurst(h)
    m, e = path.frexp()
    square = ScaledAccumulator().add_terms(m[1:] * m[1:], 2 * e[1:])
    count = path.grid.count
    if square.is_zero():
        raise ZeroDenominator("all observations are zero")
    norm = count * h * math.gamma(2 * h)
    try:
        value = -((square.value() / norm) ** (-1 / (2 * h)))
    except (OverflowDetected, OverflowError):
        log2_arg = square.log2_abs() - math.log2(norm)
        value = -math.exp2(-log2_arg / (2 * h))
    n = round(1 / delta) if math.isclose(1 / delta, round(1 / delta)) else None
    return Estimate(value, "hu-song", n, _horizon_exponent(count, n), h_used=h)


def estimate(path: SampledPath, method: str, n: int | None = None,
             delta: float | None = None, h: float | None = None) -> Estimate:
    """Dispatch by method tag; ``delta`` defaults to ``1/n``."""
    if delta is None:
        if n is None:
            raise ValueError("give n or delta")
        delta = 1.0 / n
    if method == "theta-hat":
        if n is None:
            n = round(1 / delta)
        return theta_hat(path, n)
    if method == "lse":
        return theta_lse(path, delta)
    if method == "terminal":
        return theta_terminal(path, delta)
    if method == "hu-song":
        if h is None:
            raise ValueError("hu-song needs the Hurst index")
        return theta_hu_song(path, delta, h)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def decomposition_terms(pair: SimulatedPair, params: FouParams, grid: GridSpec) -> dict:
    """Pieces of ``theta_hat = theta + (theta I + S) / D``.

    ``I = sum_k X_k int_{k/n}^{(k+1)/n} (X_s - X_k) ds`` (trapezoid on the
    refined grid), ``S = sum_k X_k dB_k``, ``D = (1/n) sum_k X_k**2`` and the
    defect ``sum_k X_k (dX_k - theta int X ds - dB_k) / D``, which equals
    ``theta_hat`` minus the right-hand side. The defect is accumulated
    directly rather than as a difference of two estimates, so rounding does
    not swamp it.
    """
    if pair.driver is None or pair.refined_driver is None:
        raise MissingDriver("decomposition needs the driving fBm (keep_refined=True)")
    if pair.refined_fou is None:
        raise MissingDriver("decomposition needs the refined fOU path (keep_refined=True)")
    rho = pair.oversample
    steps = grid.steps
    fine_dt = pair.refined_fou.grid.dt

    fm, fe = pair.refined_fou.frexp()
    # Common exponent per observation interval: the largest on [k, k+1].
    blocks = fe[: steps * rho].reshape(steps, rho).max(axis=1)
    top = np.maximum(blocks, fe[rho::rho])
    ref_top = np.repeat(top, rho)
    fx = np.ldexp(fm[:-1], fe[:-1] - ref_top)
    fx_next = np.ldexp(fm[1:], fe[1:] - ref_top)
    trap = (0.5 * fine_dt) * (fx + fx_next)
    integral = trap.reshape(steps, rho).sum(axis=1)  # int_k^{k+1} X ds, scaled by 2**-top

    xk = fx[::rho]
    xk1 = np.ldexp(fm[rho::rho], fe[rho::rho] - top)
    b = pair.refined_driver.values
    db = np.ldexp(b[rho::rho] - b[:-rho:rho], -top)
    dx = xk1 - xk

    theta = params.theta
    inner = integral - xk / grid.n
    acc = lambda terms: ScaledAccumulator().add_terms(terms, 2 * top)
    i_sum = acc(xk * inner)
    s_sum = acc(xk * db)
    d_sum = acc(xk * xk)
    cross = acc(xk * dx)
    defect = acc(xk * (dx - theta * integral - db))
    delta = 1.0 / grid.n
    return {
        "theta_hat": cross.ratio(d_sum, delta),
        "integral_term": i_sum.ratio(d_sum, delta) if not i_sum.is_zero() else 0.0,
        "noise_term": s_sum.ratio(d_sum, delta) if not s_sum.is_zero() else 0.0,
        "defect": defect.ratio(d_sum, delta) if not defect.is_zero() else 0.0,
    }


def decomposition_residual(pair: SimulatedPair, params: FouParams, grid: GridSpec) -> float:
    """``|theta_hat - theta - (theta I + S) / D|`` for a simulated pair."""
    return abs(decomposition_terms(pair, params, grid)["defect"])
