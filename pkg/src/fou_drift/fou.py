"""Simulation of the fractional Ornstein-Uhlenbeck process ``dX = theta X dt + dB^H``.

The process is simulated on a refined grid with step ``1/(n * oversample)``
and subsampled to the observation grid ``k/n``, ``0 <= k <= floor(n**m)``.

Two schemes are available:

``exact``
    The explicit solution ``X = x0 e^{theta t} + theta e^{theta t}
    int_0^t e^{-theta s} B_s ds + B_t`` with the integral done by the
    trapezoidal rule on the refined grid. It is evaluated as the stable
    recursion ``Z_{j+1} = a Z_j + (theta dt / 2)(a B_j + B_{j+1})`` on
    ``Z = X - B`` with ``a = e^{theta dt}``, which is algebraically identical
    to the trapezoid sum but never forms ``e^{-theta s}``.
``euler``
    ``X_{j+1} = (1 + theta dt) X_j + (B_{j+1} - B_j)``.

Scaled mode
-----------
For ``theta > 0`` the path grows like ``e^{theta T}`` and leaves double range
once ``theta T`` is a few hundred. The recursion is then run in blocks of at
most ``64 / log2(a)`` steps; at each block start the state mantissa is
renormalised by a power of two whenever its magnitude exceeds one, and the
shared exponent is carried alongside. The resulting :class:`SampledPath`
has per-point exponents and all mantissas stay below ``2**66``; the
estimators consume this form directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import MemoryBudgetExceeded, MissingDriver, OverflowDetected
from .fbm import check_hurst, cumulate, sample_fgn_circulant
from .paths import SampledPath, UniformGrid

DEFAULT_MAX_POINTS = 2**25
# exp(600) ~ 1e260 leaves headroom for the random amplitude.
SCALED_THRESHOLD = 600.0
_BLOCK_BITS = 64


@dataclass(frozen=True)
class FouParams:
    theta: float
    x0: float
    h: float

    def __post_init__(self):
        for name in ("theta", "x0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "h", check_hurst(self.h))


@dataclass(frozen=True)
class GridSpec:
    """Observation grid ``t_k = k/n`` for ``0 <= k <= floor(n**m)``."""

    n: int
    m: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.m > 1:
            raise ValueError(f"m must exceed 1, got {self.m!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def steps(self) -> int:
        if float(self.m).is_integer():
            return self.n ** int(self.m)
        return int(math.floor(self.n**self.m))

    @property
    def dt(self) -> float:
        return 1.0 / self.n

    @property
    def horizon(self) -> float:
        return self.steps / self.n

    def uniform(self) -> UniformGrid:
        return UniformGrid(self.dt, self.steps)


SCHEMES = ("exact", "euler")


@dataclass(frozen=True)
class Scheme:
    kind: str = "exact"
    oversample: int = 8

    def __post_init__(self):
        kind = {"exact-representation": "exact"}.get(self.kind, self.kind)
        if kind not in SCHEMES:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {SCHEMES}")
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise ValueError("oversample must be a positive integer")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "oversample", int(self.oversample))


@dataclass(frozen=True, eq=False)
class SimulatedPair:
    """fOU path and its driving fBm on the observation grid.

    ``refined_fou``/``refined_driver`` hold the simulation grid when the
    pair was produced with ``keep_refined=True``.
    """

    fou: SampledPath
    driver: SampledPath | None
    oversample: int = 1
    refined_fou: SampledPath | None = None
    refined_driver: SampledPath | None = None


def _linear_recursion(a: float, u: np.ndarray, y0: float, scaled: bool):
    """Solve ``y_{j+1} = a y_j + u_j``; returns mantissas and exponents (or None)."""
    out = np.empty(u.size + 1)
    out[0] = y0
    if not scaled:
        out[1:] = lfilter([1.0], [1.0, -a], u, zi=[a * y0])[0]
        return out, None
    exps = np.zeros(u.size + 1, dtype=np.int64)
    block = max(1, int(_BLOCK_BITS / math.log2(a))) if a > 1 else u.size
    state, shift = float(y0), 0
    for start in range(0, u.size, block):
        if abs(state) > 1.0:
            _, e = math.frexp(state)
            state = math.ldexp(state, -e)
            shift += e
        seg = np.ldexp(u[start:start + block], -shift)
        y = lfilter([1.0], [1.0, -a], seg, zi=[a * state])[0]
        out[start + 1:start + 1 + y.size] = y
        exps[start + 1:start + 1 + y.size] = shift
        state = float(y[-1])
    return out, exps


def needs_scaled_mode(theta: float, horizon: float) -> bool:
    return theta * horizon > SCALED_THRESHOLD


def simulate_fou(
    params: FouParams,
    grid: GridSpec,
    scheme: Scheme = Scheme(),
    seed=None,
    *,
    driver=None,
    zero_noise: bool = False,
    keep_refined: bool = False,
    scaled: bool | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> SimulatedPair:
    """Simulate ``X`` and ``B^H`` on ``grid``.

    Parameters
    ----------
    params, grid, scheme
        Model, observation grid and discretisation.
    seed
        Seed for the fGn sampler; required unless ``driver`` or ``zero_noise``.
    driver
        Optional refined fBm values (length ``oversample * steps + 1``,
        starting at 0) used instead of sampling. Lets refinement studies reuse
        one Brownian path across oversampling factors.
    zero_noise
        Replace the driver by zero (deterministic skeleton ``x0 e^{theta t}``).
    keep_refined
        Also return the refined-grid paths.
    scaled
        ``None`` selects scaled mode automatically when ``theta * T`` is large;
        ``False`` raises ``OverflowDetected`` instead.
    max_points
        Memory budget in refined grid points.
    """
    rho = scheme.oversample
    steps = grid.steps
    total = steps * rho
    if total + 1 > max_points:
        raise MemoryBudgetExceeded(
            f"{total + 1} refined points exceeds budget of {max_points}"
        )
    fine_dt = 1.0 / (grid.n * rho)
    fine_grid = UniformGrid(fine_dt, total)

    if driver is not None:
        b = np.asarray(driver, dtype=float)
        if b.shape != (total + 1,) or b[0] != 0:
            raise ValueError(f"driver must have {total + 1} values starting at 0")
    elif zero_noise:
        b = np.zeros(total + 1)
    else:
        if seed is None:
            raise ValueError("an explicit seed is required")
        b = cumulate(sample_fgn_circulant(total, fine_dt, params.h, seed), fine_dt).values

    need = needs_scaled_mode(params.theta, grid.horizon)
    if scaled is None:
        scaled = need
    elif need and not scaled:
        raise OverflowDetected(
            f"theta*T = {params.theta * grid.horizon:.1f} overflows; use scaled mode"
        )

    theta = params.theta
    if scheme.kind == "exact":
        a = math.exp(theta * fine_dt)
        u = (0.5 * theta * fine_dt) * (a * b[:-1] + b[1:])
        z, exps = _linear_recursion(a, u, params.x0, scaled)
        x = z + (b if exps is None else np.ldexp(b, -exps))
    else:
        a = 1.0 + theta * fine_dt
        x, exps = _linear_recursion(a, np.diff(b), params.x0, scaled)

    if not np.all(np.isfinite(x)):
        raise OverflowDetected("simulated path left double range")
    fine_x = SampledPath(fine_grid, x, exps)
    fine_b = SampledPath(fine_grid, b)
    return SimulatedPair(
        fou=fine_x.subsample(rho),
        driver=fine_b.subsample(rho),
        oversample=rho,
        refined_fou=fine_x if keep_refined else None,
        refined_driver=fine_b if keep_refined else None,
    )


def zero_noise_path(params: FouParams, grid: GridSpec, scaled: bool = False) -> SampledPath:
    """The noiseless skeleton ``x0 exp(theta k/n)`` on the observation grid."""
    k = np.arange(grid.steps + 1)
    if not scaled:
        if params.theta * grid.horizon > 700:
            raise OverflowDetected("theta*T > 700; request scaled mode")
        return SampledPath(grid.uniform(), params.x0 * np.exp(params.theta * k / grid.n))
    log2_growth = params.theta * (k / grid.n) / math.log(2)
    whole = np.floor(log2_growth)
    return SampledPath(
        grid.uniform(),
        params.x0 * np.exp2(log2_growth - whole),
        whole.astype(np.int64),
    )


def integral_residual(pair: SimulatedPair, params: FouParams) -> float:
    """``max_k |X_k - x0 - theta Q_k - B_k|`` with ``Q_k`` the refined-grid
    trapezoid of ``int_0^{t_k} X ds``."""
    if pair.refined_fou is None or pair.refined_driver is None:
        raise MissingDriver("integral residual needs the refined paths (keep_refined=True)")
    x = pair.refined_fou.to_numpy()
    b = pair.refined_driver.values
    dt = pair.refined_fou.grid.dt
    quad = np.concatenate([[0.0], np.cumsum(0.5 * dt * (x[:-1] + x[1:]))])
    r = pair.oversample
    res = x[::r] - params.x0 - params.theta * quad[::r] - b[::r]
    return float(np.max(np.abs(res)))


def integral_residual_tol(pair: SimulatedPair, params: FouParams, scheme: Scheme) -> float:
    """Bound for :func:`integral_residual`, decreasing in the oversampling factor.

    With ``q = |theta| dt`` on the refined grid:

    * exact scheme: per-step defect ``-(q**2/4) dB_j - (q**3/12) Z_j``, summed
      to ``q**2 (sup|B| / 4 + |theta| T sup|Z| / 12)``;
    * euler scheme: residual equals ``-(theta dt / 2)(X_k - x0)``, bounded by
      ``(q/2) (sup|X| + |x0|)``.

    Both are doubled for safety, plus a rounding allowance.
    """
    x = pair.refined_fou.to_numpy()
    b = pair.refined_driver.values
    dt = pair.refined_fou.grid.dt
    q = abs(params.theta) * dt
    sup_x, sup_b = float(np.max(np.abs(x))), float(np.max(np.abs(b)))
    horizon = pair.refined_fou.grid.horizon
    if scheme.kind == "exact":
        sup_z = float(np.max(np.abs(x - b)))
        quad = q * q * (sup_b / 4 + abs(params.theta) * horizon * sup_z / 12)
    else:
        quad = 0.5 * q * (sup_x + abs(params.x0))
    rounding = 8 * np.finfo(float).eps * x.size * (sup_x + sup_b) * (1 + q)
    return 2 * quad + rounding
