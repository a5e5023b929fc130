"""Generalized-inverse-Gaussian sampler against Bessel-function moments."""

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from matnet import gig_sample


def gig_mean(lam, psi, chi):
    omega = math.sqrt(psi * chi)
    scale = math.sqrt(chi / psi)
    # kve is exp-scaled, the scaling cancels in the ratio
    return scale * special.kve(lam + 1, omega) / special.kve(lam, omega)


def gig_logpdf(x, lam, psi, chi):
    omega = math.sqrt(psi * chi)
    lognorm = (0.5 * lam * math.log(psi / chi)
               - math.log(2.0 * special.kve(lam, omega)) + omega)
    return lognorm + (lam - 1.0) * np.log(x) - 0.5 * (psi * x + chi / x)


@pytest.mark.parametrize("lam,psi,chi", [
    (-3.0, 0.8, 2.0), (-2.5, 2.0, 0.3), (-2.0, 1.0, 1.0), (-1.5, 0.2, 5.0),
    (-1.0, 4.0, 0.1), (-0.75, 1.0, 0.5), (-0.5, 1.5, 1.5), (-0.25, 3.0, 3.0),
    (0.0, 1.0, 1.0), (0.25, 0.5, 0.5), (0.5, 2.0, 2.0), (0.75, 0.1, 0.1),
    (1.0, 1.0, 4.0), (1.25, 5.0, 0.2), (1.5, 0.3, 0.3), (2.0, 1.0, 0.05),
    (2.25, 2.5, 2.5), (2.5, 0.7, 6.0), (2.75, 8.0, 0.6), (3.0, 1.0, 1.0),
])
def test_mean_matches_bessel_ratio(lam, psi, chi):
    rng = np.random.default_rng(hash((lam, psi, chi)) % 2**32)
    draws = gig_sample(rng, lam, psi, chi, size=200_000)
    se = draws.std(ddof=1) / math.sqrt(draws.size)
    assert abs(draws.mean() - gig_mean(lam, psi, chi)) < 4 * se


def test_second_moment_matches_bessel_ratio():
    lam, psi, chi = -1.2, 1.7, 2.3
    omega = math.sqrt(psi * chi)
    m2 = (chi / psi) * special.kve(lam + 2, omega) / special.kve(lam, omega)
    rng = np.random.default_rng(77)
    draws = gig_sample(rng, lam, psi, chi, size=400_000)
    x2 = draws * draws
    se = x2.std(ddof=1) / math.sqrt(draws.size)
    assert abs(x2.mean() - m2) < 4 * se


def test_ks_against_numerical_cdf():
    lam, psi, chi = 0.4, 1.3, 0.9
    rng = np.random.default_rng(15)
    draws = np.sort(gig_sample(rng, lam, psi, chi, size=2000))
    grid = np.concatenate([[1e-12], draws])
    segs = [integrate.quad(lambda x: math.exp(gig_logpdf(x, lam, psi, chi)),
                           grid[k], grid[k + 1])[0]
            for k in range(len(draws))]
    cdf = np.cumsum(segs)
    n = draws.size
    ks = max(np.abs(cdf - np.arange(1, n + 1) / n).max(),
             np.abs(cdf - np.arange(n) / n).max())
    assert ks < 1.63 / math.sqrt(n)  # 1% critical value


def test_chi_zero_reduces_to_gamma():
    rng = np.random.default_rng(21)
    draws = gig_sample(rng, 1.0, 2.0 / 3.0, 0.0, size=20_000)
    stat = stats.kstest(draws, stats.gamma(a=1.0, scale=3.0).cdf)
    assert stat.pvalue > 0.01


def test_psi_zero_reduces_to_inverse_gamma():
    rng = np.random.default_rng(22)
    draws = gig_sample(rng, -2.5, 0.0, 3.0, size=20_000)
    stat = stats.kstest(draws, stats.invgamma(a=2.5, scale=1.5).cdf)
    assert stat.pvalue > 0.01


def test_extreme_lambda_and_omega_stay_finite():
    rng = np.random.default_rng(30)
    for lam, psi, chi in [(-40.0, 1.0, 1e-8), (40.0, 1e-8, 1.0),
                          (0.0, 1e-6, 1e-6), (5.0, 300.0, 300.0)]:
        draws = gig_sample(rng, lam, psi, chi, size=1000)
        assert np.all(np.isfinite(draws))
        assert np.all(draws > 0)


def test_degenerate_parameter_errors():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        gig_sample(rng, -1.0, 1.0, 0.0)  # chi=0 needs lam > 0
    with pytest.raises(ValueError):
        gig_sample(rng, 0.5, 0.0, 1.0)  # psi=0 needs lam < 0
    with pytest.raises(ValueError):
        gig_sample(rng, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        gig_sample(rng, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        gig_sample(rng, 1.0, 1.0, -1.0)


def test_scalar_and_array_forms():
    rng = np.random.default_rng(2)
    x = gig_sample(rng, 0.5, 1.0, 1.0)
    assert np.isscalar(x) or np.ndim(x) == 0
    assert x > 0
    arr = gig_sample(np.random.default_rng(2), 0.5, 1.0, 1.0, size=7)
    assert arr.shape == (7,)
    assert np.all(arr > 0)


def test_seed_determinism():
    a = gig_sample(np.random.default_rng(9), -0.3, 0.8, 1.2, size=50)
    b = gig_sample(np.random.default_rng(9), -0.3, 0.8, 1.2, size=50)
    assert np.array_equal(a, b)
