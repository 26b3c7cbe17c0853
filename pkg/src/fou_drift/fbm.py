"""Fractional Brownian motion: covariance kernels and exact samplers.

Two exact samplers are provided. :func:`sample_fgn_circulant` embeds the fGn
autocovariance in a circulant matrix of size ``2M`` (``M >= count``, chosen
FFT-friendly) and is the production path. :func:`sample_fbm_cholesky` factors
the fBm Gram matrix directly and is only meant as a small-grid reference.

Random numbers
--------------
Every sampler takes a seed (a 64-bit unsigned integer or a
``numpy.random.SeedSequence``) and draws from
``Generator(Philox(SeedSequence(seed)))``. Philox is counter based, so a
replication seeded with ``SeedSequence(base, spawn_key=(i,))`` is
reproducible on its own, whatever batch it is run in. The circulant sampler
consumes exactly ``2 * (M + 1)`` standard normals laid out as an ``(M + 1, 2)``
array, independent of the Hurst index; equal seeds therefore give common
random numbers across ``h``.
"""

from __future__ import annotations

import functools
import math

import numpy as np
import scipy.fft

from .errors import FactorizationFailure, GridTooLarge, NonPositiveDefiniteEmbedding
from .paths import SampledPath, UniformGrid

CHOLESKY_MAX_COUNT = 4096
EIGEN_RTOL = 1e-10
_DIRECT_LAG_LIMIT = 64


def check_hurst(h: float) -> float:
    h = float(h)
    if not 0.0 < h < 1.0:
        raise ValueError(f"Hurst index must lie in (0, 1), got {h!r}")
    return h


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
        ss = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


def covariance_r(t, s, h: float):
    """fBm covariance ``(s**2H + t**2H - |t - s|**2H) / 2``.

    Evaluated as ``(lo**2H + hi**2H * (1 - (d/hi)**2H)) / 2`` with the bracket
    computed through ``expm1``, so nothing cancels: the result is accurate to a
    few ulps even when ``s << t`` or ``s ~ t``. Exactly symmetric in ``(t, s)``.
    """
    h2 = 2.0 * check_hurst(h)
    t_arr = np.asarray(t, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if np.any(t_arr < 0) or np.any(s_arr < 0):
        raise ValueError("covariance_r needs t, s >= 0")
    hi = np.maximum(t_arr, s_arr)
    lo = np.minimum(t_arr, s_arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = lo / hi
        u = (hi - lo) / hi
        log_u = np.where(r < 0.5, np.log1p(-r), np.log(u))
        bracket = -np.expm1(h2 * log_u)
        out = 0.5 * (lo**h2 + hi**h2 * bracket)
    out = np.where(lo == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def fgn_autocovariance(lag, dt: float, h: float):
    """Autocovariance of fBm increments over steps of length ``dt``.

    ``dt**2H * (|k+1|**2H - 2|k|**2H + |k-1|**2H) / 2``. Lags beyond a small
    threshold use ``k**2H * (expm1(2H log1p(1/k)) + expm1(2H log1p(-1/k))) / 2``,
    which loses ``O(k eps / |2H - 1|)`` relative accuracy instead of ``O(k**2 eps)``.
    """
    h = check_hurst(h)
    if not dt > 0:
        raise ValueError("dt must be positive")
    h2 = 2.0 * h
    k = np.abs(np.asarray(lag, dtype=float))
    direct = 0.5 * ((k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)
    with np.errstate(divide="ignore", invalid="ignore"):
        kk = np.maximum(k, 2.0)
        series = 0.5 * kk**h2 * (np.expm1(h2 * np.log1p(1 / kk)) + np.expm1(h2 * np.log1p(-1 / kk)))
    out = np.where(k < _DIRECT_LAG_LIMIT, direct, series)
    if h == 0.5:
        out = np.where(k == 0, 1.0, 0.0)
    out = out * dt**h2
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=8)
def _circulant_root(count: int, dt: float, h: float) -> tuple[int, np.ndarray]:
    m = scipy.fft.next_fast_len(count, real=True)
    gamma = fgn_autocovariance(np.arange(m + 1), dt, h)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = scipy.fft.rfft(row).real
    top = lam.max()
    if lam.min() < -EIGEN_RTOL * top:
        raise NonPositiveDefiniteEmbedding(
            f"circulant eigenvalue {lam.min():.3e} below tolerance (max {top:.3e})"
        )
    root = np.sqrt(np.clip(lam, 0.0, None))
    root[1:m] *= math.sqrt(0.5)
    root.setflags(write=False)
    return m, root


def sample_fgn_circulant(count: int, dt: float, h: float, seed) -> np.ndarray:
    """``count`` exact fGn increments with step ``dt`` (circulant embedding)."""
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    count = int(count)
    h = check_hurst(h)
    m, root = _circulant_root(count, float(dt), h)
    z = make_rng(seed).standard_normal((m + 1, 2))
    w = np.empty(m + 1, dtype=complex)
    w.real = root * z[:, 0]
    w.imag = root * z[:, 1]
    w.imag[0] = 0.0
    w.imag[m] = 0.0
    y = scipy.fft.irfft(w, n=2 * m) * math.sqrt(2 * m)
    return y[:count]


def cumulate(increments, dt: float = 1.0) -> SampledPath:
    """Partial sums of ``increments`` with a leading zero."""
    inc = np.asarray(increments, dtype=float)
    values = np.concatenate([[0.0], np.cumsum(inc)])
    return SampledPath(UniformGrid(dt, inc.size), values)


def sample_fbm_circulant(grid: UniformGrid, h: float, seed) -> SampledPath:
    return cumulate(sample_fgn_circulant(grid.count, grid.dt, h, seed), grid.dt)


def sample_fbm_cholesky(grid: UniformGrid, h: float, seed) -> SampledPath:
    """Reference sampler: Cholesky factor of the fBm Gram matrix on the grid."""
    if grid.count > CHOLESKY_MAX_COUNT:
        raise GridTooLarge(f"{grid.count} points exceeds {CHOLESKY_MAX_COUNT}")
    t = grid.times[1:]
    gram = covariance_r(t[:, None], t[None, :], h)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailure(str(exc)) from exc
    z = make_rng(seed).standard_normal(grid.count)
    return SampledPath(grid, np.concatenate([[0.0], chol @ z]))
