"""Distribution math: closed-form values, inverses, moments, max-stability."""
import math

import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from gumbelsketch import gumbel
from gumbelsketch.validation import ks_critical_value, max_stability_ks


def bisect_root(f, lo, hi, iterations=200):
    """Sign-change bisection; independent oracle for inverse values."""
    flo = f(lo)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_constants():
    assert abs(gumbel.EULER_GAMMA - 0.577215664901532860) < 1e-15
    assert abs(gumbel.VARIANCE - math.pi**2 / 6) < 1e-15


def test_cdf_at_location():
    assert gumbel.cdf(0.0, 0.0) == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert gumbel.cdf(5.0, 5.0) == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_cdf_tails():
    assert gumbel.cdf(50.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert gumbel.cdf(-50.0, 0.0) == 0.0  # graceful underflow


def test_cdf_median():
    # solve cdf(x) = 1/2 by bisection; the analytic root is -ln(ln 2)
    root = bisect_root(lambda x: gumbel.cdf(x, 0.0) - 0.5, -5.0, 5.0)
    assert root == pytest.approx(-math.log(math.log(2.0)), abs=1e-12)
    assert gumbel.cdf(-math.log(math.log(2.0)), 0.0) == pytest.approx(0.5, abs=1e-12)


def test_cdf_monotone():
    x = np.linspace(-12.0, 25.0, 2001)
    f = gumbel.cdf(x, 0.3)
    assert np.all(np.diff(f) >= 0.0)


def test_pdf_values():
    assert gumbel.pdf(0.0, 0.0) == pytest.approx(math.exp(-1.0), abs=1e-12)
    x = np.linspace(-4.0, 9.0, 57)
    assert np.allclose(gumbel.pdf(x, 1.75), gumbel.pdf(x - 1.75, 0.0), rtol=0, atol=1e-15)


def test_pdf_integrates_to_one():
    left, err_l = scipy.integrate.quad(lambda x: gumbel.pdf(x, 0.0), -20.0, 0.0)
    right, err_r = scipy.integrate.quad(lambda x: gumbel.pdf(x, 0.0), 0.0, 40.0, limit=200)
    assert err_l + err_r < 1e-9
    assert left + right == pytest.approx(1.0, abs=1e-9)


def test_pdf_is_cdf_derivative():
    x = np.linspace(-3.0, 10.0, 401)
    h = 1e-6
    numeric = (gumbel.cdf(x + h, 0.0) - gumbel.cdf(x - h, 0.0)) / (2 * h)
    assert np.allclose(numeric, gumbel.pdf(x, 0.0), atol=1e-8)


def test_sample_from_uniform_known_points():
    assert gumbel.sample_from_uniform(1.0 / math.e, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert gumbel.sample_from_uniform(math.exp(-math.e), 0.0) == pytest.approx(-1.0, abs=1e-12)


def test_sample_round_trip_points():
    for t in (0.1, 0.5, 0.9):
        assert gumbel.cdf(gumbel.sample_from_uniform(t, 2.5), 2.5) == pytest.approx(t, abs=1e-12)


def test_sample_round_trip_dense_grid():
    t = np.linspace(1e-9, 1.0 - 1e-9, 20001)
    back = gumbel.cdf(gumbel.sample_from_uniform(t, 0.7), 0.7)
    assert np.max(np.abs(back - t)) < 1e-12


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.25, 1.5])
def test_sample_domain_errors(bad):
    with pytest.raises(ValueError):
        gumbel.sample_from_uniform(bad, 0.0)
    with pytest.raises(ValueError):
        gumbel.quantile(bad, 0.0)
    with pytest.raises(ValueError):
        gumbel.sample_from_uniform(np.array([0.5, bad]), 0.0)


def test_quantile_known_points():
    assert gumbel.quantile(math.exp(-1.0), 5.0) == pytest.approx(5.0, abs=1e-12)
    median = bisect_root(lambda x: gumbel.cdf(x, 0.0) - 0.5, -5.0, 5.0)
    assert gumbel.quantile(0.5, 0.0) == pytest.approx(median, abs=1e-10)
    assert gumbel.quantile(0.5, 0.0) == pytest.approx(0.36651292058166435, abs=1e-12)


def test_quantile_round_trip():
    for x in (-1.0, 0.0, 3.0):
        assert gumbel.quantile(gumbel.cdf(x, 0.0), 0.0) == pytest.approx(x, abs=1e-10)


def test_matches_scipy_reference():
    x = np.linspace(-4.0, 12.0, 301)
    ref = scipy.stats.gumbel_r(loc=1.25)
    assert np.allclose(gumbel.cdf(x, 1.25), ref.cdf(x), rtol=0, atol=1e-13)
    assert np.allclose(gumbel.pdf(x, 1.25), ref.pdf(x), rtol=0, atol=1e-13)
    p = np.linspace(0.001, 0.999, 199)
    assert np.allclose(gumbel.quantile(p, 1.25), ref.ppf(p), rtol=0, atol=1e-9)


def test_moments_monte_carlo():
    rng = np.random.default_rng(0xF1C5)
    u = rng.random(10**6)
    u = np.where(u == 0.0, 2.0**-54, u)
    x = np.asarray(gumbel.sample_from_uniform(u, 0.0))
    assert x.mean() == pytest.approx(gumbel.EULER_GAMMA, abs=0.005)
    assert x.var() == pytest.approx(gumbel.VARIANCE, abs=0.02)


def test_exp_transform_moments():
    # exp(-X) for X ~ Gumbel(mu) has mean exp(-mu) and variance exp(-2 mu)
    rng = np.random.default_rng(0xF1C5 + 1)
    u = rng.random(10**6)
    u = np.where(u == 0.0, 2.0**-54, u)
    t = np.exp(-np.asarray(gumbel.sample_from_uniform(u, 2.0)))
    assert t.mean() == pytest.approx(math.exp(-2.0), abs=3 * math.exp(-2.0) / 1000 * 5)
    assert t.var() == pytest.approx(math.exp(-4.0), rel=0.05)


@pytest.mark.parametrize("n", [2, 8, 64])
def test_max_stability(n):
    # maxima of n unit-Gumbel draws follow the same shape, shifted by ln n
    samples = 20000
    stat = max_stability_ks(n, samples, seed=0xF1C5)
    assert stat < ks_critical_value(samples, alpha=0.01)
