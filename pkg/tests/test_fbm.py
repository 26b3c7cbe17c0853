import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from fou_drift import (
    FactorizationFailure,
    GridTooLarge,
    NonPositiveDefiniteEmbedding,
    UniformGrid,
    covariance_r,
    cumulate,
    fgn_autocovariance,
    sample_fbm_cholesky,
    sample_fgn_circulant,
)
from fou_drift.fbm import _circulant_root, check_hurst, make_rng, sample_fbm_circulant

hurst = st.floats(0.01, 0.99)
times = st.floats(0.0, 1e3, allow_nan=False)


def spawn(base, r):
    return np.random.SeedSequence(base, spawn_key=(r,))


# covariance_r


def test_covariance_diagonal():
    # 1.5**0.6 = 1.2754245...
    assert covariance_r(1.5, 1.5, 0.3) == pytest.approx(1.5**0.6, rel=1e-15)
    assert covariance_r(1.5, 1.5, 0.3) == pytest.approx(1.2754245, abs=1e-7)


def test_covariance_brownian_case_is_min():
    assert covariance_r(2.0, 1.0, 0.5) == pytest.approx(1.0, rel=1e-15)


def test_covariance_direct_value():
    assert covariance_r(2.0, 1.0, 0.25) == pytest.approx(0.5 * math.sqrt(2), rel=1e-15)
    assert covariance_r(2.0, 1.0, 0.25) == pytest.approx(0.7071068, abs=1e-7)


def test_covariance_at_origin_is_zero():
    assert covariance_r(3.0, 0.0, 0.2) == 0.0
    assert covariance_r(0.0, 0.0, 0.2) == 0.0


def test_covariance_rejects_negative_time():
    with pytest.raises(ValueError):
        covariance_r(-1.0, 1.0, 0.3)


@pytest.mark.parametrize("h", [0.0, 1.0, -0.2, 1.5])
def test_hurst_outside_open_interval_rejected(h):
    with pytest.raises(ValueError):
        check_hurst(h)


@given(times, times, hurst)
def test_covariance_symmetric_exactly(t, s, h):
    assert covariance_r(t, s, h) == covariance_r(s, t, h)


@given(times, times, hurst)
def test_covariance_matches_textbook_formula(t, s, h):
    naive = 0.5 * (t ** (2 * h) + s ** (2 * h) - abs(t - s) ** (2 * h))
    scale = max(t, s) ** (2 * h)
    assert abs(covariance_r(t, s, h) - naive) <= 1e-12 * scale + 1e-300


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.integers(-20, 20), hurst)
def test_self_similarity_power_of_two(t, s, k, h):
    # scaling by 2**k is exact on the inputs, so the identity holds to a few ulps
    a = 2.0**k
    lhs = covariance_r(a * t, a * s, h)
    rhs = a ** (2 * h) * covariance_r(t, s, h)
    assert abs(lhs - rhs) <= 4 * math.ulp(rhs) + 4 * math.ulp(lhs)


def test_vectorised_covariance_matches_scalar():
    t = np.array([0.0, 0.5, 1.0, 2.0])
    s = np.array([0.5, 0.5, 3.0, 0.0])
    got = covariance_r(t, s, 0.3)
    assert got.tolist() == [covariance_r(a, b, 0.3) for a, b in zip(t, s)]


# fgn_autocovariance


def test_fgn_lag_zero():
    assert fgn_autocovariance(0, 0.1, 0.45) == pytest.approx(0.1**0.9, rel=1e-15)
    assert fgn_autocovariance(0, 0.1, 0.45) == pytest.approx(0.1258925, abs=1e-7)


def test_fgn_lag_one():
    assert fgn_autocovariance(1, 1.0, 0.25) == pytest.approx(0.5 * (math.sqrt(2) - 2), rel=1e-15)
    assert fgn_autocovariance(1, 1.0, 0.25) == pytest.approx(-0.2928932, abs=1e-7)


def test_fgn_independent_at_half():
    assert fgn_autocovariance(1, 1.0, 0.5) == 0.0
    assert np.all(fgn_autocovariance(np.arange(1, 500), 0.3, 0.5) == 0.0)


@given(st.integers(1, 10**6), st.floats(0.01, 0.49), st.floats(1e-4, 10))
def test_fgn_negative_for_rough_h(k, h, dt):
    assert fgn_autocovariance(k, dt, h) < 0


@given(st.integers(2, 10**5), hurst)
def test_fgn_relative_accuracy(k, h):
    assume(h != 0.5)  # exact zeros there, covered above
    # long-double reference through the cancellation-free series form
    ld, h2 = np.longdouble, np.longdouble(2 * h)
    kk = ld(k)
    ref = float(ld(0.5) * kk**h2 * (np.expm1(h2 * np.log1p(1 / kk)) + np.expm1(h2 * np.log1p(-1 / kk))))
    got = fgn_autocovariance(k, 1.0, h)
    eps = np.finfo(float).eps
    if k < 64:  # direct form: rounding of the three powers
        assert abs(got - ref) <= 8 * eps * (k + 1) ** (2 * h)
    else:  # series form: the two expm1 terms cancel by a factor k / |2h - 1|
        assert abs(got - ref) <= 16 * eps * k * max(1.0, 1 / abs(2 * h - 1)) * abs(ref)


def test_fgn_partial_sums_shrink():
    for h in (0.05, 0.25, 0.45):
        partial = []
        for big_k in (10, 100, 1000):
            k = np.arange(1, big_k + 1)
            partial.append(abs(1.0 + 2 * math.fsum(fgn_autocovariance(k, 1.0, h))))
        assert partial[0] > partial[1] > partial[2]


# samplers


def test_circulant_deterministic_per_seed():
    a = sample_fgn_circulant(1000, 0.01, 0.3, 17)
    b = sample_fgn_circulant(1000, 0.01, 0.3, 17)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_fgn_circulant(1000, 0.01, 0.3, 18))


def test_circulant_same_normals_across_hurst():
    # the normal layout does not depend on h, so h -> 1/2 gives plain white noise
    x = sample_fgn_circulant(257, 1.0, 0.5, 5)
    m, root = _circulant_root(257, 1.0, 0.5)
    z = make_rng(5).standard_normal((m + 1, 2))
    w = root * (z[:, 0] + 1j * z[:, 1])
    w.imag[[0, m]] = 0
    import scipy.fft

    assert np.allclose(x, (scipy.fft.irfft(w, 2 * m) * math.sqrt(2 * m))[:257])


def test_circulant_variance_and_lag_one():
    # standard errors from 40 independent replications (increments are correlated)
    stats = np.array([
        (y.var(), np.mean(y[:-1] * y[1:]))
        for y in (sample_fgn_circulant(10**4, 1.0, 0.25, spawn(9, r)) for r in range(40))
    ])
    se = stats.std(axis=0, ddof=1)
    x = sample_fgn_circulant(10**4, 1.0, 0.25, 2024)
    assert abs(x.var() - 1.0) <= 3 * se[0]
    assert abs(np.mean(x[:-1] * x[1:]) - -0.2928932) <= 3 * se[1]
    truth = np.array([1.0, -0.2928932])
    assert np.all(np.abs(stats.mean(axis=0) - truth) <= 3 * se / math.sqrt(40))


def test_circulant_rejects_empty():
    with pytest.raises(ValueError):
        sample_fgn_circulant(0, 1.0, 0.3, 1)


def test_negative_embedding_raises(monkeypatch):
    import fou_drift.fbm as fbm

    _circulant_root.cache_clear()
    monkeypatch.setattr(fbm, "EIGEN_RTOL", -1.0)
    with pytest.raises(NonPositiveDefiniteEmbedding):
        fbm._circulant_root(16, 1.0, 0.3)
    _circulant_root.cache_clear()


@pytest.mark.parametrize("h", [0.02, 0.3, 0.5, 0.7, 0.95])
def test_embedding_nonnegative_all_h(h):
    _circulant_root(5000, 1e-3, h)


def test_seed_must_be_uint64():
    for bad in (-1, 2**64, 1.5, True):
        with pytest.raises(ValueError):
            make_rng(bad)


def test_cholesky_unit_variance_over_seeds():
    g = UniformGrid(1.0, 1)
    v = np.array([sample_fbm_cholesky(g, 0.3, spawn(3, r)).values[1] for r in range(10**4)])
    se = math.sqrt(2.0 / v.size)
    assert abs(v.var(ddof=1) - 1.0) <= 3 * se


def test_cholesky_starts_at_zero_and_is_deterministic():
    g = UniformGrid(0.1, 50)
    a = sample_fbm_cholesky(g, 0.2, 8)
    assert a.values[0] == 0.0
    assert np.array_equal(a.values, sample_fbm_cholesky(g, 0.2, 8).values)


def test_cholesky_guards():
    with pytest.raises(GridTooLarge):
        sample_fbm_cholesky(UniformGrid(1.0, 4097), 0.3, 1)
    # very close time points make the Gram matrix numerically singular
    with pytest.raises(FactorizationFailure):
        sample_fbm_cholesky(UniformGrid(1e-300, 3000), 0.99, 1)


def _entrywise_z(samples, cov):
    n = samples.shape[0]
    emp = samples.T @ samples / n
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n)
    return np.abs(emp - cov) / se


def test_cholesky_law_on_64_points():
    g = UniformGrid(1 / 64, 64)
    t = g.times[1:]
    cov = covariance_r(t[:, None], t[None, :], 0.45)
    x = np.array([sample_fbm_cholesky(g, 0.45, spawn(2025, r)).values[1:] for r in range(10**4)])
    assert _entrywise_z(x, cov).max() < 3


# cumulate


def test_cumulate_examples():
    assert cumulate([]).values.tolist() == [0.0]
    assert cumulate([1, -1, 2]).values.tolist() == [0.0, 1.0, 0.0, 2.0]


@given(st.lists(st.integers(-1000, 1000), max_size=50))
def test_cumulate_inverts_diff(ints):
    path = np.concatenate([[0.0], np.cumsum(np.asarray(ints, dtype=float))])
    assert np.array_equal(cumulate(np.diff(path)).values, path)


def test_fbm_circulant_grid():
    p = sample_fbm_circulant(UniformGrid(0.01, 100), 0.3, 4)
    assert p.values[0] == 0 and len(p) == 101 and p.grid.dt == 0.01
