import math
import warnings

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from llgauss.leadlag import (BootstrapConfig, LagGrid, bootstrap_quantile, bootstrap_statistics,
                             contrast, contrast_naive, lead_lag_test, p_value, test_statistic)
from llgauss.qform import qf_fourth_cumulant, qf_variance, spectral_norm, trace_fourth
from llgauss.rng import Seed
from llgauss.spotvol import band_limits

from conftest import make_path

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def lattice_paths(draw, max_n=25, ticks=100):
    def times():
        k = draw(st.lists(st.integers(1, ticks - 1), min_size=1, max_size=max_n - 1, unique=True))
        return np.concatenate(([0], np.sort(k))) / ticks
    t1, t2 = times(), times()
    floats = st.floats(-10, 10, allow_nan=False)
    x1 = np.array(draw(st.lists(floats, min_size=t1.size, max_size=t1.size)))
    x2 = np.array(draw(st.lists(floats, min_size=t2.size, max_size=t2.size)))
    lags = draw(st.lists(st.integers(-30, 30), min_size=1, max_size=21, unique=True))
    grid = LagGrid(np.sort(lags) / ticks, 1 / ticks)
    return make_path(t1, x1, t2, x2, T=1.0, resolution=1 / ticks), grid


@SETTINGS
@given(lattice_paths())
def test_sweep_equals_naive(data):
    path, grid = data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert np.array_equal(contrast(path, grid), contrast_naive(path, grid))


@SETTINGS
@given(lattice_paths(), st.sampled_from([0.5, 2.0, -4.0, 0.125, -3.0, 1.7]))
def test_scale_equivariance(data, c):
    path, grid = data
    cfg = BootstrapConfig(R=20, seed=Seed(1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        base = lead_lag_test(path, grid, cfg, alpha=0.1)
        scaled = lead_lag_test(path.scaled(c, 1.0), grid, cfg, alpha=0.1)
    if math.frexp(c)[0] in (0.5, -0.5):
        # powers of two keep every product exact
        assert np.array_equal(scaled.contrast, c * base.contrast)
        assert scaled.statistic == abs(c) * base.statistic
        assert np.array_equal(scaled.tstar, abs(c) * base.tstar)
        assert scaled.p_value == base.p_value
    else:
        tol = 1e-12 * max(1.0, float(np.max(np.abs(scaled.contrast))))
        assert np.allclose(scaled.contrast, c * base.contrast, rtol=1e-12, atol=tol)
        assert np.allclose(scaled.tstar, abs(c) * base.tstar, rtol=1e-12, atol=tol)


@SETTINGS
@given(lattice_paths())
def test_swap_and_negate(data):
    path, grid = data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        u = contrast(path, grid)
        v = contrast(path.swapped(), grid.negated())
    assert np.array_equal(np.sort(np.abs(u)), np.sort(np.abs(v)))


@SETTINGS
@given(lattice_paths())
def test_identity_bootstrap(data):
    path, grid = data
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        t = test_statistic(contrast(path, grid))
        ts = bootstrap_statistics(path, grid, BootstrapConfig(R=3, multiplier="identity"))
    assert np.all(ts == t)


@SETTINGS
@given(arrays(float, st.integers(1, 200), elements=st.floats(0, 100)),
       st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_quantile_monotone_and_pvalue_range(ts, a1, a2):
    lo, hi = sorted((a1, a2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert bootstrap_quantile(ts, lo) >= bootstrap_quantile(ts, hi)
    p = p_value(float(np.median(ts)), ts)
    assert 0 <= p <= 1


@st.composite
def symmetric(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    m = draw(arrays(float, (n, n), elements=st.floats(-5, 5)))
    return (m + m.T) / 2


@SETTINGS
@given(symmetric(), st.integers(0, 2**31 - 1))
def test_kappa4_orthogonal_invariance(g, s):
    n = g.shape[0]
    q, _ = np.linalg.qr(np.random.default_rng(s).standard_normal((n, n)))
    h = q.T @ g @ q
    scale = max(1.0, trace_fourth(g))
    assert abs(qf_fourth_cumulant(h) - qf_fourth_cumulant(g)) <= 1e-9 * 48 * scale
    assert math.isclose(qf_variance(h), qf_variance(g), rel_tol=1e-9, abs_tol=1e-9)


@SETTINGS
@given(symmetric())
def test_kappa4_nonnegative_and_bounded(g):
    k4 = qf_fourth_cumulant(g)
    assert k4 >= 0
    assert k4 <= 24 * spectral_norm(g) ** 2 * qf_variance(g) * (1 + 1e-9) + 1e-12


@SETTINGS
@given(arrays(float, 20, elements=st.floats(0, 10)), arrays(float, 20, elements=st.floats(0, 1)),
       st.floats(0, 5))
def test_band_ordering(est, s, q):
    lo, up, valid = band_limits(est, s, q)
    assert np.array_equal(valid, 1 - s * q > 0)
    assert np.all(lo[valid] <= est[valid]) and np.all(est[valid] <= up[valid])
