"""Mixture prior stack: draws, ordering, densities, enumerated marginal."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from matnet import (LAYERS, FactorSeries, MultilayerPanel, PriorConfig,
                    marginal_loglik_small, mixture_logpdf_b, prior_draw,
                    prior_logpdf_b, sort_b_components, sort_sigma_components)
from matnet.priors import (MixtureParams, enumerate_allocations,
                           prior_draw_layer, trunc_gamma_draw)


def test_config_validation_errors():
    with pytest.raises(ValueError):
        PriorConfig(m_b=0).validate()
    with pytest.raises(ValueError):
        PriorConfig(phi_b=0.0).validate()
    with pytest.raises(ValueError):
        PriorConfig(a2=-1.0).validate()
    PriorConfig().validate()


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 4), r=st.integers(1, 3), m_b=st.integers(1, 4),
       m_sigma=st.integers(1, 3), seed=st.integers(0, 10_000))
def test_prior_draw_layer_invariants(n, r, m_b, m_sigma, seed):
    config = PriorConfig(m_b=m_b, m_sigma=m_sigma)
    rng = np.random.default_rng(seed)
    mix, alloc, b, sigma2 = prior_draw_layer(config, n, r, rng)
    mix.validate()
    assert mix.mu[0] == 0.0
    assert np.all(mix.alpha > 1.0)
    diag = np.arange(n)
    assert np.all(b[:, diag, diag] == 0.0)
    assert np.all(alloc.comp_b[:, diag, diag] == -1)
    off = alloc.comp_b[:, ~np.eye(n, dtype=bool)]
    assert np.all((off >= 0) & (off < m_b))
    assert np.all((alloc.comp_sigma >= 0) & (alloc.comp_sigma < m_sigma))
    assert np.all(sigma2 > 0)
    assert np.all(np.isfinite(b))


def test_prior_draw_covers_all_layers():
    mix, alloc, params = prior_draw(PriorConfig(), 3, 2,
                                    np.random.default_rng(0))
    assert set(mix) == set(LAYERS)
    for lk in LAYERS:
        assert params.b[lk].shape == (2, 3, 3)
        assert params.sigma2[lk].shape == (3,)


def test_allocation_frequencies_track_weights():
    config = PriorConfig(m_b=3, m_sigma=2)
    rng = np.random.default_rng(4)
    counts = np.zeros(3)
    weights = np.zeros(3)
    trials = 400
    for _ in range(trials):
        mix, alloc, _, _ = prior_draw_layer(config, 4, 2, rng)
        off = alloc.comp_b[alloc.comp_b >= 0]
        counts += np.bincount(off, minlength=3)
        weights += mix.p * off.size
    # aggregated over draws, E[counts] equals the summed weights
    se = np.sqrt(weights.sum() * 0.5)
    assert np.all(np.abs(counts - weights) < 5 * se)


def test_gamma2_first_component_prior_is_scale_parameterized():
    config = PriorConfig(m_b=1, a0=1.0, b0=2.5)
    rng = np.random.default_rng(8)
    draws = np.array([prior_draw_layer(config, 2, 1, rng)[0].gamma2[0]
                      for _ in range(4000)])
    assert stats.kstest(draws, stats.gamma(a=1.0, scale=2.5).cdf).pvalue > 0.01


def test_trunc_gamma_draw_matches_truncated_cdf():
    rng = np.random.default_rng(5)
    shape, scale, lower = 2.0, 2.0, 1.0
    draws = trunc_gamma_draw(rng, shape, scale, lower, size=20_000)
    assert np.all(draws > lower)
    g = stats.gamma(a=shape, scale=scale)

    def cdf(x):
        return (g.cdf(x) - g.cdf(lower)) / (1.0 - g.cdf(lower))

    assert stats.kstest(draws, cdf).pvalue > 0.01


def test_bayesian_lasso_marginal_has_positive_excess_kurtosis():
    config = PriorConfig(m_b=1, a0=1.0, b0=1.0)
    rng = np.random.default_rng(12)
    chunks = []
    for _ in range(28_000):
        _, _, b, _ = prior_draw_layer(config, 4, 3, rng)
        chunks.append(b[:, ~np.eye(4, dtype=bool)].ravel())
    draws = np.concatenate(chunks)
    assert draws.size >= 1_000_000
    excess = stats.kurtosis(draws, fisher=True)
    assert excess > 1.0  # Laplace marginal has excess kurtosis 3


def _mix(p, mu, gamma2, q, alpha, beta):
    return MixtureParams(p=np.asarray(p, float), mu=np.asarray(mu, float),
                         gamma2=np.asarray(gamma2, float),
                         q=np.asarray(q, float), alpha=np.asarray(alpha, float),
                         beta=np.asarray(beta, float))


def test_prior_logpdf_b_anchors():
    mix = _mix([0.5, 0.5], [0.0, 1.7], [1.0, 0.4], [1.0], [2.0], [2.0])
    assert prior_logpdf_b(0.0, 0, mix) == pytest.approx(
        -0.5 * math.log(2 * math.pi), rel=1e-14)
    assert prior_logpdf_b(1.7, 1, mix) == pytest.approx(
        -0.5 * math.log(2 * math.pi * 0.4), rel=1e-14)


def test_mixture_logpdf_integrates_to_one():
    mix = _mix([0.3, 0.5, 0.2], [0.0, -1.0, 2.0], [0.7, 0.5, 1.3],
               [1.0], [2.0], [2.0])
    val, _ = integrate.quad(lambda x: math.exp(float(mixture_logpdf_b(x, mix))),
                            -40.0, 40.0, limit=200)
    assert val == pytest.approx(1.0, abs=1e-9)


def test_sort_b_components_orders_and_relabels():
    rng = np.random.default_rng(3)
    mix = _mix([0.2, 0.3, 0.5], [0.0, 2.0, -1.0], [1.0, 0.5, 0.25],
               [1.0], [2.0], [2.0])
    comp = rng.integers(0, 3, size=(2, 3, 3))
    comp[:, np.arange(3), np.arange(3)] = -1
    params_before = {int(c): (mix.mu[c], mix.gamma2[c], mix.p[c])
                     for c in range(3)}
    labels_before = comp.copy()
    sort_b_components(mix, comp)
    assert np.all(np.diff(mix.mu[1:]) >= 0)
    for c_old in range(3):
        sel = labels_before == c_old
        relabeled = np.unique(comp[sel])
        assert relabeled.size == 1
        c_new = int(relabeled[0])
        assert params_before[c_old] == (mix.mu[c_new], mix.gamma2[c_new],
                                        mix.p[c_new])
    again = mix.copy()
    comp2 = comp.copy()
    sort_b_components(again, comp2)
    assert np.array_equal(comp, comp2) and np.array_equal(again.mu, mix.mu)


def test_sort_b_preserves_mixture_density():
    mix = _mix([0.2, 0.3, 0.5], [0.0, 2.0, -1.0], [1.0, 0.5, 0.25],
               [1.0], [2.0], [2.0])
    grid = np.linspace(-4, 4, 41)
    before = mixture_logpdf_b(grid, mix)
    comp = np.zeros((1, 2, 2), dtype=np.int64)
    sort_b_components(mix, comp)
    assert np.allclose(mixture_logpdf_b(grid, mix), before, rtol=1e-13)


def test_sort_sigma_components_orders_means_and_extras():
    mix = _mix([1.0], [0.0], [1.0], [0.25, 0.5, 0.25],
               [3.0, 2.0, 4.0], [1.0, 4.0, 9.0])
    comp = np.array([0, 1, 2, 1], dtype=np.int64)
    extra = np.array([10.0, 20.0, 30.0])
    means_before = (mix.beta / (mix.alpha - 1.0)).copy()
    sigma_of_slot = means_before[comp]
    sort_sigma_components(mix, comp, extras=[extra])
    means_after = mix.beta / (mix.alpha - 1.0)
    assert np.all(np.diff(means_after) > 0)
    assert np.allclose(means_after[comp], sigma_of_slot)
    order = np.argsort(means_before)
    assert np.array_equal(extra, np.array([10.0, 20.0, 30.0])[order])


def test_enumerated_weights_sum_to_one():
    weights = np.array([0.2, 0.5, 0.3])
    total = 0.0
    count = 0
    for labels, w in enumerate_allocations(4, weights):
        total += w
        count += 1
    assert count == 3 ** 4
    assert total == pytest.approx(1.0, abs=1e-12)


def _tiny_panel(n, t, r, seed):
    rng = np.random.default_rng(seed)
    diag = np.arange(n)
    layers = {}
    for lk in LAYERS:
        y = 0.5 * rng.standard_normal((t, n, n))
        y[:, diag, diag] = 0.0
        layers[lk] = y
    dates = [f"2020-02-{d + 1:02d}" for d in range(t)]
    panel = MultilayerPanel(layers=layers, dates=dates,
                            node_labels=[f"N{i}" for i in range(n)],
                            sectors=["s"] * n, flags={})
    factors = FactorSeries(values=rng.standard_normal((t, r)),
                           names=[f"f{k + 1}" for k in range(r)], dates=dates)
    return panel, factors


def _mc_marginal_layer(y, f, mix, n_draws, rng):
    """Prior-predictive MC estimate of one slice's marginal density."""
    n = y.shape[0]
    r = f.size
    off = ~np.eye(n, dtype=bool)
    cells = np.argwhere(off)
    m_b = mix.p.size
    comp = rng.choice(m_b, size=(n_draws, cells.shape[0], r), p=mix.p)
    b = rng.normal(mix.mu[comp], np.sqrt(mix.gamma2[comp]))
    comp_s = rng.choice(mix.q.size, size=(n_draws, n), p=mix.q)
    sigma2 = mix.beta[comp_s] / rng.gamma(mix.alpha[comp_s])
    mean = b @ f
    var = sigma2[:, cells[:, 1]]
    vals = y[off]
    loglik = -0.5 * (np.log(2 * np.pi * var)
                     + (vals[None, :] - mean) ** 2 / var).sum(axis=1)
    lik = np.exp(loglik)
    return lik.mean(), lik.std(ddof=1) / math.sqrt(n_draws)


def test_marginal_loglik_matches_prior_predictive_mc():
    panel, factors = _tiny_panel(n=2, t=1, r=1, seed=31)
    mix = {lk: _mix([0.6, 0.4], [0.0, 0.8], [0.5, 0.3], [0.5, 0.5],
                    [3.0, 4.0], [2.0, 9.0]) for lk in LAYERS}
    got = marginal_loglik_small(panel, factors, mix)

    rng = np.random.default_rng(99)
    want = 0.0
    rel_var = 0.0
    for lk in LAYERS:
        m, se = _mc_marginal_layer(panel.layers[lk][0], factors.values[0],
                                   mix[lk], 400_000, rng)
        want += math.log(m)
        rel_var += (se / m) ** 2
    assert abs(got - want) < 3 * math.sqrt(rel_var)


def test_marginal_loglik_degenerate_single_component():
    panel, factors = _tiny_panel(n=2, t=2, r=1, seed=32)
    mix = {lk: _mix([1.0], [0.0], [0.4], [1.0], [3.0], [2.0])
           for lk in LAYERS}
    got = marginal_loglik_small(panel, factors, mix)

    # single component: cells share one IG(3,2) noise integrated by quadrature
    want = 0.0
    for lk in LAYERS:
        for t in range(2):
            f = factors.values[t]
            for j in range(2):
                yv = float(panel.layers[lk][t, 1 - j, j])
                mvar = 0.4 * float(f @ f)

                def integrand(v):
                    return (stats.invgamma(3.0, scale=2.0).pdf(v)
                            * stats.norm.pdf(yv, 0.0, math.sqrt(v + mvar)))

                val, _ = integrate.quad(integrand, 0.0, np.inf, limit=300)
                want += math.log(val)
    assert got == pytest.approx(want, rel=1e-8)
