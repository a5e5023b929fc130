"""Hierarchical mixture priors over coefficients and noise variances.

Each layer carries two finite mixtures. Coefficients draw from
p_1 N(0, gamma2_1) + sum_{m>=2} p_m N(mu_m, gamma2_m) with mu_2 < ... <
mu_Mb; the first component shrinks toward zero and its variance gets a
Gamma(a0, scale b0) prior (a0 = 1 gives the Lasso-type exponential mixing),
the located components get N(0, s2) means and InverseGamma(a1, b1) variances.
Noise variances draw from sum_m q_m IG(alpha_m, beta_m) with prior means
beta_m/(alpha_m - 1) strictly increasing and alpha_m > 1. Mixture weights are
symmetric Dirichlet.

Component indices are 0-based in code: component 0 is the shrinkage (b) or
lowest-mean (sigma2) component. Allocation arrays use -1 on masked cells.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammainc, gammaincinv, gammaln, logsumexp

from .matnorm import LAYERS, FactorSeries, ModelParams, MultilayerPanel, offdiag_mask


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters shared by every layer's prior stack."""

    m_b: int = 3
    m_sigma: int = 2
    phi_b: float = 1.0
    phi_sigma: float = 1.0
    s2: float = 10.0
    a0: float = 1.0   # gamma2_1 ~ Gamma(a0, scale b0)
    b0: float = 1.0
    a1: float = 2.0   # gamma2_m ~ InverseGamma(a1, b1), m >= 2
    b1: float = 2.0
    a2: float = 2.0   # alpha_m ~ Gamma(a2, scale b2) truncated to (1, inf)
    b2: float = 2.0
    a3: float = 2.0   # beta_m ~ Gamma(a3, rate b3)
    b3: float = 2.0

    def validate(self) -> None:
        if self.m_b < 1 or self.m_sigma < 1:
            raise ValueError("mixtures need at least one component")
        for name in ("phi_b", "phi_sigma", "s2", "a0", "b0", "a1", "b1",
                     "a2", "b2", "a3", "b3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class MixtureParams:
    """One layer's mixture block.

    p, mu, gamma2 have length m_b (mu[0] is pinned at 0); q, alpha, beta have
    length m_sigma with alpha > 1 and beta/(alpha - 1) increasing.
    """

    p: np.ndarray
    mu: np.ndarray
    gamma2: np.ndarray
    q: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def copy(self) -> "MixtureParams":
        return MixtureParams(*(np.array(getattr(self, f)) for f in
                               ("p", "mu", "gamma2", "q", "alpha", "beta")))

    def validate(self) -> None:
        for w in (self.p, self.q):
            if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
                raise ValueError("mixture weights must form a simplex")
        if self.mu[0] != 0.0:
            raise ValueError("first coefficient component mean must be 0")
        if self.mu.size > 2 and np.any(np.diff(self.mu[1:]) < 0):
            raise ValueError("located component means must be sorted")
        if np.any(self.gamma2 <= 0):
            raise ValueError("component variances must be positive")
        if np.any(self.alpha <= 1.0):
            raise ValueError("noise shape parameters must exceed 1")
        if np.any(self.beta <= 0):
            raise ValueError("noise scale parameters must be positive")
        means = self.beta / (self.alpha - 1.0)
        if means.size > 1 and np.any(np.diff(means) <= 0):
            raise ValueError("noise component means must be strictly increasing")


@dataclass
class Allocations:
    """One layer's latent component labels.

    comp_b has shape (R, n, n) with values in 0..m_b-1 off the diagonal and
    -1 on it; comp_sigma has shape (n,) with values in 0..m_sigma-1.
    """

    comp_b: np.ndarray
    comp_sigma: np.ndarray

    def copy(self) -> "Allocations":
        return Allocations(np.array(self.comp_b), np.array(self.comp_sigma))


def trunc_gamma_draw(rng: np.random.Generator, shape: float, scale: float,
                     lower: float, size: int | None = None) -> np.ndarray | float:
    """Gamma(shape, scale) conditioned on exceeding `lower`, by inverse CDF."""
    u0 = gammainc(shape, lower / scale)
    u = u0 + (1.0 - u0) * rng.random(size)
    return scale * gammaincinv(shape, u)


def _categorical(rng: np.random.Generator, weights: np.ndarray,
                 size: tuple[int, ...]) -> np.ndarray:
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.random(size), side="right").astype(np.int64)


def sort_b_components(mix: MixtureParams, comp_b: np.ndarray) -> None:
    """Relabel located coefficient components so mu_2 <= ... <= mu_Mb."""
    m = mix.mu.size
    if m <= 2:
        return
    order = np.argsort(mix.mu[1:], kind="stable")
    if np.array_equal(order, np.arange(m - 1)):
        return
    mix.mu[1:] = mix.mu[1:][order]
    mix.gamma2[1:] = mix.gamma2[1:][order]
    mix.p[1:] = mix.p[1:][order]
    relabel = np.empty(m, dtype=np.int64)
    relabel[0] = 0
    relabel[1 + order] = np.arange(1, m)
    mask = comp_b >= 0
    comp_b[mask] = relabel[comp_b[mask]]


def sort_sigma_components(mix: MixtureParams, comp_sigma: np.ndarray,
                          extras: list[np.ndarray] | None = None) -> None:
    """Relabel noise components so beta/(alpha - 1) is increasing.

    extras are per-component arrays (adaptive proposal state) permuted along.
    """
    m = mix.alpha.size
    if m <= 1:
        return
    order = np.argsort(mix.beta / (mix.alpha - 1.0), kind="stable")
    if np.array_equal(order, np.arange(m)):
        return
    mix.alpha[:] = mix.alpha[order]
    mix.beta[:] = mix.beta[order]
    mix.q[:] = mix.q[order]
    for arr in extras or []:
        arr[:] = arr[order]
    relabel = np.empty(m, dtype=np.int64)
    relabel[order] = np.arange(m)
    comp_sigma[:] = relabel[comp_sigma]


def prior_draw_layer(config: PriorConfig, n_nodes: int, n_factors: int,
                     rng: np.random.Generator
                     ) -> tuple[MixtureParams, Allocations, np.ndarray, np.ndarray]:
    """Ancestral draw of one layer's prior stack.

    Components are canonicalized before allocations are drawn, so the draw
    lands in the identified ordering. Returns (mix, alloc, b, sigma2).
    """
    n, r = n_nodes, n_factors
    mask = offdiag_mask(n)
    p = rng.dirichlet(np.full(config.m_b, config.phi_b))
    mu = np.zeros(config.m_b)
    mu[1:] = rng.normal(0.0, math.sqrt(config.s2), config.m_b - 1)
    gamma2 = np.empty(config.m_b)
    gamma2[0] = rng.gamma(config.a0, config.b0)
    if config.m_b > 1:
        gamma2[1:] = config.b1 / rng.gamma(config.a1, 1.0, config.m_b - 1)
    q = rng.dirichlet(np.full(config.m_sigma, config.phi_sigma))
    alpha = np.atleast_1d(trunc_gamma_draw(rng, config.a2, config.b2, 1.0,
                                           config.m_sigma))
    beta = rng.gamma(config.a3, 1.0 / config.b3, config.m_sigma)

    m = MixtureParams(p=p, mu=mu, gamma2=gamma2, q=q, alpha=alpha, beta=beta)
    dummy_b = np.full((r, n, n), -1, dtype=np.int64)
    dummy_s = np.zeros(n, dtype=np.int64)
    sort_b_components(m, dummy_b)
    sort_sigma_components(m, dummy_s)

    comp_b = _categorical(rng, m.p, (r, n, n))
    comp_b[:, ~mask] = -1
    comp_sigma = _categorical(rng, m.q, (n,))
    alloc = Allocations(comp_b=comp_b, comp_sigma=comp_sigma)

    safe = np.clip(comp_b, 0, None)
    coef = rng.normal(m.mu[safe], np.sqrt(m.gamma2[safe]))
    coef[:, ~mask] = 0.0
    sigma2 = m.beta[comp_sigma] / rng.gamma(m.alpha[comp_sigma], 1.0)
    return m, alloc, coef, sigma2


def prior_draw(config: PriorConfig, n_nodes: int, n_factors: int,
               rng: np.random.Generator
               ) -> tuple[dict, dict, ModelParams]:
    """Joint ancestral draw of mixtures, allocations, and model parameters.

    Returns (mix, alloc, params) where mix and alloc map layer keys to
    MixtureParams and Allocations.
    """
    config.validate()
    mix: dict[tuple[int, int], MixtureParams] = {}
    alloc: dict[tuple[int, int], Allocations] = {}
    b: dict[tuple[int, int], np.ndarray] = {}
    sigma2: dict[tuple[int, int], np.ndarray] = {}
    for lk in LAYERS:
        mix[lk], alloc[lk], b[lk], sigma2[lk] = prior_draw_layer(
            config, n_nodes, n_factors, rng)
    return mix, alloc, ModelParams(b=b, sigma2=sigma2)


def normal_logpdf(x: np.ndarray, mean: np.ndarray, var: np.ndarray) -> np.ndarray:
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def invgamma_logpdf(x: np.ndarray, shape: float, scale: float) -> np.ndarray:
    return (shape * np.log(scale) - gammaln(shape)
            - (shape + 1.0) * np.log(x) - scale / x)


def prior_logpdf_b(value: float, comp: int, mix: MixtureParams) -> float:
    """Log-density of one coefficient under its allocated component."""
    return float(normal_logpdf(np.asarray(value), mix.mu[comp], mix.gamma2[comp]))


def mixture_logpdf_b(value: np.ndarray, mix: MixtureParams) -> np.ndarray:
    """Log-density under the full coefficient mixture (allocation summed out)."""
    v = np.asarray(value, dtype=float)[..., None]
    comps = np.log(mix.p) + normal_logpdf(v, mix.mu, mix.gamma2)
    return logsumexp(comps, axis=-1)


def enumerate_allocations(n_slots: int, weights: np.ndarray):
    """Yield (labels, joint weight) over all component assignments of n_slots."""
    m = weights.size
    for labels in itertools.product(range(m), repeat=n_slots):
        w = float(np.prod(weights[list(labels)])) if n_slots else 1.0
        yield labels, w


def _column_marginal(y_col: np.ndarray, f: np.ndarray, mix: MixtureParams,
                     epsrel: float) -> float:
    """Marginal density of one column's unmasked cells for one slice.

    Sums over the column's sigma component and every per-(cell, factor)
    coefficient allocation; conditional on the allocation and sigma2 = v the
    cells are independent normals, and v integrates against its
    inverse-Gamma component by adaptive quadrature on the log scale.

    y_col holds the n - 1 unmasked values of the column; f the slice's factor
    row (length R).
    """
    n_cells = y_col.size
    r = f.size
    f2 = f * f
    total = 0.0
    for labels, w_b in enumerate_allocations(n_cells * r, mix.p):
        d = np.asarray(labels, dtype=np.int64).reshape(n_cells, r)
        means = mix.mu[d] @ f
        extra_var = mix.gamma2[d] @ f2
        for c in range(mix.q.size):
            a_c, b_c = float(mix.alpha[c]), float(mix.beta[c])

            def integrand(w: float) -> float:
                v = math.exp(w)
                logp = float(invgamma_logpdf(np.asarray(v), a_c, b_c)) + w
                logp += float(np.sum(normal_logpdf(y_col, means, v + extra_var)))
                return math.exp(logp)

            center = math.log(b_c / (a_c + 1.0))
            val, _ = quad(integrand, center - 40.0, center + 40.0,
                          epsabs=0.0, epsrel=epsrel, limit=300)
            total += float(mix.q[c]) * w_b * val
    return total


def marginal_loglik_small(panel: MultilayerPanel, factors: FactorSeries,
                          mix: dict, epsrel: float = 1e-10) -> float:
    """Exact log marginal likelihood by allocation enumeration (tiny cases).

    Integrates coefficients and noise variances out of the likelihood given
    the mixture parameters: per slice and layer, every coefficient allocation
    (off-diagonal cell x factor) and noise allocation is enumerated, columns
    factorize, and the remaining one-dimensional noise integral is computed
    by quadrature. Cost grows as m_b^((n-1) R) per column; intended for
    n <= 3 validation runs.
    """
    n = panel.n_nodes
    mask = offdiag_mask(n)
    total = 0.0
    for lk in LAYERS:
        y = panel.layers[lk]
        for t in range(panel.n_periods):
            f = factors.values[t]
            for j in range(n):
                col = y[t, mask[:, j], j]
                val = _column_marginal(col, f, mix[lk], epsrel)
                total += math.log(val)
    return total
