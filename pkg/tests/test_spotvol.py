import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from llgauss.errors import ConfigurationError, DataError, ParameterError
from llgauss.rng import Seed
from llgauss.spotvol import (KERNELS, Kernel, SpotVolConfig, band_limits, eval_grid,
                             gaussian_analog_quantile, s_n, simulate_spot_path,
                             simulate_sup_gaussian_analog, spot_estimate,
                             undersmoothing_diagnostics, uniform_band)


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_kernel_constants(name):
    k = KERNELS[name]
    mass = integrate.quad(k, -k.support, k.support)[0]
    sq = integrate.quad(lambda x: k(x) ** 2, -k.support, k.support)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert sq == pytest.approx(float(k.int_sq), abs=1e-10)
    assert k(k.support + 1e-9) == 0 and k(-k.support - 1e-9) == 0


def test_config_validation():
    with pytest.raises(ParameterError):
        SpotVolConfig(h=0.6)
    with pytest.raises(ParameterError):
        SpotVolConfig(h=0.05, a_n=0.04)
    with pytest.raises(ParameterError):
        SpotVolConfig(h=0.05, delta=0.01)
    with pytest.raises(ParameterError):
        SpotVolConfig(h=0.05, kernel="gaussian")
    cfg = SpotVolConfig(h=0.05)
    assert cfg.a_n == pytest.approx(0.1) and cfg.delta == pytest.approx(0.0025)


def test_eval_grid_inside_trim():
    g = eval_grid(0.1, 1.0, 0.0025)
    assert g[0] == pytest.approx(0.1) and g[-1] <= 0.9 + 1e-12
    assert g.size == 321


def test_constant_path_gives_zero():
    t = np.arange(101) / 100
    est = spot_estimate(t, np.full(101, 3.0), SpotVolConfig(h=0.1))
    assert np.all(est == 0)


def test_equal_increments_riemann_sum():
    n, c = 2000, 0.01
    t = np.arange(n + 1) / n
    cfg = SpotVolConfig(h=0.05)
    est = spot_estimate(t, c * np.arange(n + 1), cfg)
    # c^2 * sum_i K_h = c^2 * n (1 + O(1/(nh)))
    assert np.all(np.abs(est / (c * c * n) - 1) < 5 / (n * 0.05))


def test_smoke_estimate_close_to_one():
    cfg = SpotVolConfig(h=0.05)
    for k in range(5):
        t, x = simulate_spot_path(1.0, 5000, 1.0, Seed(3, k))
        assert np.max(np.abs(spot_estimate(t, x, cfg) - 1)) < 0.5


def test_non_equidistant_rejected():
    t = np.array([0, 0.1, 0.3, 1.0])
    with pytest.raises(DataError):
        spot_estimate(t, np.zeros(4), SpotVolConfig(h=0.1))


def test_s_n_riemann_value():
    t = np.arange(101) / 100
    exact = s_n(0.5, 0.1, "epanechnikov", t)
    assert exact == pytest.approx(math.sqrt(0.12), rel=0.02)


def test_s_n_halves_variance_when_n_doubles():
    a = s_n(0.5, 0.05, "quartic", np.arange(1001) / 1000)
    b = s_n(0.5, 0.05, "quartic", np.arange(2001) / 2000)
    assert b / a == pytest.approx(1 / math.sqrt(2), rel=0.02)


def test_gaussian_analog_is_standardized():
    # one grid point at a time: Var Z_n(t) = 1
    n, h = 400, 0.1
    t = np.arange(n + 1) / n
    from llgauss.spotvol import kernel_weights, _s_from_weights
    W = kernel_weights(np.array([0.3, 0.5]), t[:-1], h, "epanechnikov")
    s = _s_from_weights(W, 1 / n)
    z = np.random.default_rng(1).standard_normal((10_000, n)) * math.sqrt(2) / n
    Z = (W @ z.T) / s[:, None]
    assert np.all(np.abs(Z.var(axis=1) - 1) < 0.05)


def test_sup_of_flat_kernel_is_abs_normal():
    flat = Kernel("flat", lambda x: 0.5 + 0 * x, 1.0, Fraction(1, 2))
    sups = simulate_sup_gaussian_analog(200, 10.0, flat, 0.1, 1.0, 0.05, 20_000, Seed(1))
    # |N(0,1)| has median 0.6745 and 0.95-quantile 1.96
    assert np.median(sups) == pytest.approx(0.6745, abs=0.03)
    assert np.quantile(sups, 0.95) == pytest.approx(1.96, abs=0.05)


def test_sup_quantile_grows_with_effective_bandwidths():
    few = simulate_sup_gaussian_analog(2000, 0.1, "epanechnikov", 0.2, 1.0, 0.005, 3000, Seed(2))
    many = simulate_sup_gaussian_analog(2000, 0.02, "epanechnikov", 0.04, 1.0, 0.001, 3000, Seed(2))
    assert np.quantile(many, 0.95) >= np.quantile(few, 0.95)


def test_sup_draws_do_not_depend_on_chunking():
    a = simulate_sup_gaussian_analog(300, 0.1, "triangular", 0.2, 1.0, 0.005, 50, Seed(4), chunk=7)
    b = simulate_sup_gaussian_analog(300, 0.1, "triangular", 0.2, 1.0, 0.005, 50, Seed(4), chunk=512)
    assert np.allclose(a, b, rtol=1e-13)


def test_empty_window_is_configuration_error():
    with pytest.raises(ConfigurationError):
        simulate_sup_gaussian_analog(5, 0.01, "epanechnikov", 0.3, 1.0, 0.0005, 10, Seed(0))


def test_band_arithmetic():
    lo, up, ok = band_limits(np.array([1.0, 1.0]), np.array([0.1, 0.4]), 2.5)
    assert lo[0] == pytest.approx(0.8) and up[0] == pytest.approx(1 / 0.75)
    assert ok.tolist() == [True, False] and math.isinf(up[1])


def test_band_ordering_and_nesting():
    t, x = simulate_spot_path(1.0, 2000, 1.0, Seed(7))
    bands = [uniform_band(t, x, SpotVolConfig(h=0.05, alpha=a, R=2000, seed=Seed(8)))
             for a in (0.01, 0.05, 0.2)]
    for b in bands:
        v = b.valid
        assert np.all(b.lower[v] <= b.sigma2_hat[v]) and np.all(b.sigma2_hat[v] <= b.upper[v])
    assert bands[0].quantile >= bands[1].quantile >= bands[2].quantile
    for wide, narrow in zip(bands, bands[1:]):
        assert np.all(wide.lower <= narrow.lower) and np.all(wide.upper >= narrow.upper)


def test_band_invalid_points_and_csv(tmp_path):
    n = 200
    t, x = simulate_spot_path(1.0, n, 1.0, Seed(1))
    cfg = SpotVolConfig(h=0.02, R=200)
    band = uniform_band(t, x, cfg)
    assert not band.valid.all()  # s_n q > 1 with only ~8 points per window
    f = tmp_path / "band.csv"
    band.write_csv(f)
    lines = f.read_text().splitlines()
    assert lines[0] == "t,sigma2_hat,s_n,lower,upper,valid"
    assert len(lines) == band.t.size + 1 and any(l.endswith("false") for l in lines)


def test_quantile_reuse():
    t, x = simulate_spot_path(1.0, 1000, 1.0, Seed(1))
    cfg = SpotVolConfig(h=0.05, R=500)
    q, _ = gaussian_analog_quantile(1000, cfg)
    assert uniform_band(t, x, cfg).quantile == q
    assert uniform_band(t, x, cfg, quantile=q).quantile == q


def test_horizon_mismatch():
    t, x = simulate_spot_path(1.0, 100, 2.0, Seed(1))
    with pytest.raises(ConfigurationError):
        uniform_band(t, x, SpotVolConfig(h=0.1))


def test_undersmoothing_flags():
    d = undersmoothing_diagnostics(5000, 0.05, 0.5)
    assert d["bias_term"] == pytest.approx(5000 * 0.05**2 * math.log(5000))
    assert d["bias_warning"] and d["noise_warning"]
    assert not undersmoothing_diagnostics(10**6, 1e-3, 1.0)["bias_warning"]
