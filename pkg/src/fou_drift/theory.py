"""Closed-form oracles and numerical checks of auxiliary identities and bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ScanTooLarge
from .fbm import check_hurst, fgn_autocovariance
from .fou import FouParams, GridSpec, Scheme, simulate_fou

NEG_CORR_MAX_POINTS = 10**4
LEMMA_MAX_POINTS = 10**7


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    observed: float
    target: float
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))
        object.__setattr__(self, "observed", float(self.observed))
        object.__setattr__(self, "target", float(self.target))

    def to_dict(self) -> dict:
        return asdict(self)


def isserlis_fourth(c12, c13, c14, c23, c24, c34) -> float:
    """``E[x1 x2 x3 x4]`` for a centred Gaussian vector with the given covariances.

    The three pairings are summed exactly rounded, so relabelling is exact.
    """
    return math.fsum((c12 * c34, c13 * c24, c14 * c23))


def increment_cov(k: int, j: int, n: int, h: float) -> float:
    """Covariance of the fBm increments over ``[k/n, (k+1)/n]`` and ``[j/n, (j+1)/n]``."""
    if k < 0 or j < 0:
        raise ValueError("increment indices must be nonnegative")
    h = check_hurst(h)
    return n ** (-2 * h) * fgn_autocovariance(abs(k - j), 1.0, h)


def check_negative_increment_correlation(n: int, m: float, h: float) -> CheckReport:
    """Scan every pair ``k != j`` of grid increments for a nonnegative covariance."""
    h = check_hurst(h)
    if h > 0.5:
        raise ValueError("negative correlation needs h <= 1/2")
    steps = GridSpec(n, m).steps
    if steps > NEG_CORR_MAX_POINTS:
        raise ScanTooLarge(f"{steps} increments exceeds scan guard {NEG_CORR_MAX_POINTS}")
    # Covariance depends on |k - j| only; tabulate once, then visit each pair.
    table = n ** (-2 * h) * np.atleast_1d(fgn_autocovariance(np.arange(steps), 1.0, h))
    idx = np.arange(steps)
    worst = -math.inf
    for k in range(steps):
        row = table[np.abs(idx - k)]
        row[k] = -math.inf
        worst = max(worst, float(row.max()))
    passed = worst < 0
    return CheckReport(
        "neg-corr",
        passed,
        worst,
        0.0,
        f"n={n} m={m} h={h}: {steps * (steps - 1)} off-diagonal pairs, max covariance {worst:.3e}",
    )


def _lemma_sum(n: int, m: float, power: float, log_power: int) -> float:
    if n < 2:
        raise ValueError("n must be at least 2")
    steps = GridSpec(n, m).steps
    if steps > LEMMA_MAX_POINTS:
        raise ScanTooLarge(f"{steps} terms exceeds guard {LEMMA_MAX_POINTS}")
    x = np.arange(1, steps + 1) / n
    return math.fsum(x**power * np.log(x) ** log_power)


def lemma_sum_i(n: int, m: float, h: float) -> float:
    """``sum_{k<n^m} ((k+1)/n)**H log**2((k+1)/n)``."""
    return _lemma_sum(n, m, check_hurst(h), 2)


def lemma_sum_ii(n: int, m: float, h: float) -> float:
    """``sum_{k<n^m} ((k+1)/n)**2H log**4((k+1)/n)``."""
    return _lemma_sum(n, m, 2 * check_hurst(h), 4)


def lemma_envelope_i(n: int, m: float, h: float) -> float:
    return n ** ((m - 1) * h + m) * math.log(n) ** 2


def lemma_envelope_ii(n: int, m: float, h: float) -> float:
    return n ** (2 * h * (m - 1) + m) * math.log(n) ** 4


def lemma_ratios(which: str, ns, m: float, h: float) -> list[float]:
    total, env = {
        "i": (lemma_sum_i, lemma_envelope_i),
        "ii": (lemma_sum_ii, lemma_envelope_ii),
    }[which]
    return [total(n, m, h) / env(n, m, h) for n in ns]


def check_lemma_sums(ns=(4, 8, 16, 32, 64), m: float = 2.0, h: float = 0.45) -> list[CheckReport]:
    """Bounded-ratio study: max/min < 10 and no increase across the last three ``n``."""
    reports = []
    for which in ("i", "ii"):
        r = lemma_ratios(which, ns, m, h)
        spread = max(r) / min(r)
        rising = r[-3] < r[-2] < r[-1]
        reports.append(CheckReport(
            f"lemma-sum-{which}",
            spread < 10 and not rising,
            spread,
            10.0,
            "ratios " + ", ".join(f"{v:.6g}" for v in r)
            + ("; increasing over the last three points" if rising else ""),
        ))
    return reports


def variance_lower_bound_constant(h: float) -> float:
    """``(1/2) int_0^1 int_0^1 (s**2H + t**2H - |s-t|**2H) ds dt = 1 / (2 (H + 1))``."""
    return 1.0 / (2.0 * (check_hurst(h) + 1.0))


def check_variance_lower_bound(n: int, m: float, h: float, theta: float,
                               replications: int, seed, scheme: Scheme = Scheme()) -> CheckReport:
    """Monte Carlo ``Var(int_0^T X ds)`` against ``C(h) n**((m-1)(2H+2)) (1 - 4/sqrt(R))``.

    The integral is the trapezoid over the observation grid; replication ``r``
    uses ``SeedSequence(seed, spawn_key=(r,))``.
    """
    if not theta < 0:
        raise ValueError("the variance bound concerns theta < 0")
    if replications < 1000:
        raise ValueError("need at least 1000 replications")
    params = FouParams(theta, 1.0, h)
    grid = GridSpec(n, m)
    integrals = np.empty(replications)
    for r in range(replications):
        x = simulate_fou(params, grid, scheme, np.random.SeedSequence(seed, spawn_key=(r,))).fou.to_numpy()
        integrals[r] = grid.dt * (0.5 * x[0] + x[1:-1].sum() + 0.5 * x[-1])
    var = float(np.var(integrals, ddof=1))
    bound = variance_lower_bound_constant(h) * n ** ((m - 1) * (2 * h + 2))
    target = bound * (1 - 4 / math.sqrt(replications))
    return CheckReport(
        "var-bound",
        var >= target,
        var,
        target,
        f"n={n} m={m} h={h} theta={theta} R={replications}: Var {var:.6g} vs bound {bound:.6g}",
    )


def noiseless_estimator_oracle(theta: float, n: int) -> float:
    """``n (e^{theta/n} - 1)``: the estimator evaluated on ``x0 e^{theta t}``."""
    if n < 1:
        raise ValueError("n must be positive")
    return n * math.expm1(theta / n)


def check_isserlis(cov, samples: int, seed) -> CheckReport:
    """Compare :func:`isserlis_fourth` with a Monte Carlo fourth moment (3 s.e.)."""
    from .fbm import make_rng

    cov = np.asarray(cov, dtype=float)
    formula = isserlis_fourth(cov[0, 1], cov[0, 2], cov[0, 3], cov[1, 2], cov[1, 3], cov[2, 3])
    x = make_rng(seed).multivariate_normal(np.zeros(4), cov, size=samples, method="cholesky")
    prod = x.prod(axis=1)
    mc = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(samples))
    return CheckReport(
        "isserlis",
        abs(mc - formula) <= 3 * se,
        mc,
        formula,
        f"Monte Carlo {mc:.6g} +/- {se:.2g} vs Isserlis {formula:.6g} ({samples} samples)",
    )
