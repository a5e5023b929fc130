"""Blocked Gibbs sampler for the masked multilayer factor regression.

Each layer is an independent model, so the chain factorizes: every layer gets
its own random stream (spawned from the run seed), and running layers
sequentially or in a thread pool yields bit-identical draws per layer.

Sweep order: coefficients, noise variances, coefficient allocations, noise
allocations, both weight vectors, then the mixture hyperparameters (component
means, component variances, noise shapes by random-walk Metropolis on
log(alpha - 1), noise scales), followed by a sort-and-relabel pass that
restores the component-ordering identification. The update functions draw
raw full conditionals; only the sweep re-canonicalizes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln

from .gig import gig_sample
from .matnorm import (LAYERS, FactorSeries, ModelParams, MultilayerPanel,
                      layer_mean, offdiag_mask)
from .priors import (Allocations, MixtureParams, PriorConfig,
                     invgamma_logpdf, normal_logpdf, prior_draw_layer,
                     sort_b_components, sort_sigma_components)

_TINY_CHI = 1e-300


@dataclass(frozen=True)
class SamplerConfig:
    """Chain length and adaptation settings.

    Adaptation of the Metropolis proposal scales runs during the burn-in
    sweeps with a diminishing Robbins-Monro step and freezes afterwards, so
    the retained draws come from a fixed kernel.
    """

    n_iter: int = 5000
    n_burn: int = 2500
    thin: int = 5
    seed: int = 0
    target_accept: float = 0.44
    adapt_rate: float = 1.0
    adapt_power: float = 0.6

    def validate(self) -> None:
        if self.n_iter <= self.n_burn:
            raise ValueError("n_iter must exceed n_burn")
        if self.n_burn < 0 or self.thin < 1:
            raise ValueError("n_burn must be >= 0 and thin >= 1")
        if not (0.0 < self.target_accept < 1.0):
            raise ValueError("target_accept must lie in (0, 1)")
        if self.adapt_rate <= 0 or self.adapt_power <= 0:
            raise ValueError("adaptation constants must be positive")
        if self.n_saved < 1:
            raise ValueError("no draws would be saved: need "
                             "n_iter - n_burn >= thin")

    @property
    def n_saved(self) -> int:
        return (self.n_iter - self.n_burn) // self.thin


@dataclass
class LayerState:
    """Complete sampler state for one layer."""

    b: np.ndarray                # (R, n, n), diagonal fixed at 0
    sigma2: np.ndarray           # (n,), column noise variances
    mix: MixtureParams
    alloc: Allocations
    rwmh_log_scale: np.ndarray   # (m_sigma,) log proposal scales
    rwmh_accepts: np.ndarray     # (m_sigma,) post-freeze accepted moves
    rwmh_trials: np.ndarray      # (m_sigma,) post-freeze proposals
    adapt_steps: np.ndarray      # (m_sigma,) Robbins-Monro step counters

    def copy(self) -> "LayerState":
        return LayerState(
            b=np.array(self.b), sigma2=np.array(self.sigma2),
            mix=self.mix.copy(), alloc=self.alloc.copy(),
            rwmh_log_scale=np.array(self.rwmh_log_scale),
            rwmh_accepts=np.array(self.rwmh_accepts),
            rwmh_trials=np.array(self.rwmh_trials),
            adapt_steps=np.array(self.adapt_steps))


@dataclass
class ChainState:
    layers: dict[tuple[int, int], LayerState]
    iteration: int = 0

    def copy(self) -> "ChainState":
        return ChainState({lk: ls.copy() for lk, ls in self.layers.items()},
                          self.iteration)

    def params(self) -> ModelParams:
        return ModelParams(b={lk: ls.b for lk, ls in self.layers.items()},
                           sigma2={lk: ls.sigma2 for lk, ls in self.layers.items()})


@dataclass
class LayerDraws:
    """Saved posterior draws for one layer (leading axis = saved sweep)."""

    b: np.ndarray
    sigma2: np.ndarray
    p: np.ndarray
    q: np.ndarray
    mu: np.ndarray
    gamma2: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    accept_rate: np.ndarray


@dataclass
class PosteriorDraws:
    layers: dict[tuple[int, int], LayerDraws]
    saved_iterations: list[int]
    prior: PriorConfig
    sampler: SamplerConfig

    @property
    def n_saved(self) -> int:
        return len(self.saved_iterations)


def new_layer_state(config: PriorConfig, n_nodes: int, n_factors: int,
                    rng: np.random.Generator) -> LayerState:
    """Ancestral prior draw packaged as an initial layer state."""
    mix, alloc, b, sigma2 = prior_draw_layer(config, n_nodes, n_factors, rng)
    m = config.m_sigma
    return LayerState(b=b, sigma2=sigma2, mix=mix, alloc=alloc,
                      rwmh_log_scale=np.zeros(m), rwmh_accepts=np.zeros(m),
                      rwmh_trials=np.zeros(m), adapt_steps=np.zeros(m))


def init_state(panel: MultilayerPanel, factors: FactorSeries,
               config: PriorConfig, rng: np.random.Generator) -> ChainState:
    n = panel.n_nodes
    r = factors.n_factors
    return ChainState({lk: new_layer_state(config, n, r, rng) for lk in LAYERS})


def valid_weights(panel: MultilayerPanel) -> dict[tuple[int, int], np.ndarray]:
    """Float 0/1 tensors marking cells that enter the likelihood."""
    n = panel.n_nodes
    base = offdiag_mask(n)[None, :, :]
    out = {}
    for lk in LAYERS:
        w = np.broadcast_to(base, panel.layers[lk].shape) & ~panel.flags.get(
            lk, np.zeros(panel.layers[lk].shape, dtype=bool))
        out[lk] = w.astype(float)
    return out


# ---------------------------------------------------------------------------
# Per-layer conditional updates. y is (T, n, n), w the 0/1 validity weights,
# f the (T, R) factor matrix. All draw exact full conditionals.
# ---------------------------------------------------------------------------

def _update_b_layer(ls: LayerState, y: np.ndarray, w: np.ndarray,
                    f: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = y.shape[1]
    safe = np.clip(ls.alloc.comp_b, 0, None)
    mu_d = ls.mix.mu[safe]
    g2_d = ls.mix.gamma2[safe]
    s2col = ls.sigma2[None, :]
    diag = np.arange(n)
    resid = w * (y - layer_mean(ls.b, f))
    for r in range(f.shape[1]):
        fr = f[:, r]
        partial = resid + (w * ls.b[r][None, :, :]) * fr[:, None, None]
        sum_f2 = np.einsum("tij,t->ij", w, fr * fr)
        sum_fe = np.einsum("tij,t->ij", partial, fr)
        prec = 1.0 / g2_d[r] + sum_f2 / s2col
        mean = (sum_fe / s2col + mu_d[r] / g2_d[r]) / prec
        draw = mean + rng.standard_normal((n, n)) / np.sqrt(prec)
        draw[diag, diag] = 0.0
        ls.b[r] = draw
        resid = partial - (w * draw[None, :, :]) * fr[:, None, None]
    return resid


def _update_sigma2_layer(ls: LayerState, resid: np.ndarray, w: np.ndarray,
                         rng: np.random.Generator) -> None:
    ss = np.einsum("tij,tij->j", resid, resid)
    cnt = np.einsum("tij->j", w)
    a_d = ls.mix.alpha[ls.alloc.comp_sigma]
    b_d = ls.mix.beta[ls.alloc.comp_sigma]
    ls.sigma2 = (b_d + 0.5 * ss) / rng.gamma(a_d + 0.5 * cnt)


def _update_alloc_b_layer(ls: LayerState, rng: np.random.Generator) -> None:
    masked = ls.alloc.comp_b < 0
    lw = np.log(ls.mix.p) + normal_logpdf(ls.b[..., None], ls.mix.mu,
                                          ls.mix.gamma2)
    lw -= lw.max(axis=-1, keepdims=True)
    pr = np.exp(lw)
    pr /= pr.sum(axis=-1, keepdims=True)
    cum = np.cumsum(pr, axis=-1)
    u = rng.random(ls.b.shape)
    comp = (cum < u[..., None]).sum(axis=-1).astype(np.int64)
    comp[masked] = -1
    ls.alloc.comp_b = comp


def _update_alloc_sigma_layer(ls: LayerState, rng: np.random.Generator) -> None:
    lw = np.log(ls.mix.q) + invgamma_logpdf(ls.sigma2[:, None], ls.mix.alpha,
                                            ls.mix.beta)
    lw -= lw.max(axis=-1, keepdims=True)
    pr = np.exp(lw)
    pr /= pr.sum(axis=-1, keepdims=True)
    cum = np.cumsum(pr, axis=-1)
    u = rng.random(ls.sigma2.shape)
    ls.alloc.comp_sigma = (cum < u[..., None]).sum(axis=-1).astype(np.int64)


def _update_weights_layer(ls: LayerState, prior: PriorConfig,
                          rng: np.random.Generator) -> None:
    cb = ls.alloc.comp_b
    counts_b = np.bincount(cb[cb >= 0], minlength=prior.m_b)
    ls.mix.p = rng.dirichlet(prior.phi_b + counts_b)
    counts_s = np.bincount(ls.alloc.comp_sigma, minlength=prior.m_sigma)
    ls.mix.q = rng.dirichlet(prior.phi_sigma + counts_s)


def _update_mu_layer(ls: LayerState, prior: PriorConfig,
                     rng: np.random.Generator) -> None:
    for m in range(1, ls.mix.mu.size):
        sel = ls.alloc.comp_b == m
        k = int(sel.sum())
        sum_b = float(ls.b[sel].sum())
        var = 1.0 / (1.0 / prior.s2 + k / ls.mix.gamma2[m])
        ls.mix.mu[m] = rng.normal(var * sum_b / ls.mix.gamma2[m], math.sqrt(var))


def _update_gamma2_layer(ls: LayerState, prior: PriorConfig,
                         rng: np.random.Generator) -> None:
    sel0 = ls.alloc.comp_b == 0
    k1 = int(sel0.sum())
    chi = float((ls.b[sel0] ** 2).sum())
    if k1 > 0 and chi <= 0.0:
        chi = _TINY_CHI
    ls.mix.gamma2[0] = gig_sample(rng, prior.a0 - 0.5 * k1, 2.0 / prior.b0,
                                  chi if k1 > 0 else 0.0)
    for m in range(1, ls.mix.gamma2.size):
        sel = ls.alloc.comp_b == m
        k = int(sel.sum())
        ss = float(((ls.b[sel] - ls.mix.mu[m]) ** 2).sum())
        ls.mix.gamma2[m] = (prior.b1 + 0.5 * ss) / rng.gamma(prior.a1 + 0.5 * k)


def _alpha_log_target(theta: float, k: int, sum_log_s2: float, log_beta: float,
                      prior: PriorConfig) -> float:
    alpha = 1.0 + math.exp(theta)
    val = ((prior.a2 - 1.0) * math.log(alpha) - alpha / prior.b2
           + k * (alpha * log_beta - gammaln(alpha)) - alpha * sum_log_s2)
    return val + theta  # Jacobian of alpha = 1 + exp(theta)


def _update_alpha_layer(ls: LayerState, prior: PriorConfig,
                        scfg: SamplerConfig, rng: np.random.Generator,
                        adapt: bool) -> None:
    for m in range(ls.mix.alpha.size):
        sel = ls.alloc.comp_sigma == m
        k = int(sel.sum())
        sum_log_s2 = float(np.log(ls.sigma2[sel]).sum())
        log_beta = math.log(ls.mix.beta[m])
        theta = math.log(ls.mix.alpha[m] - 1.0)
        here = _alpha_log_target(theta, k, sum_log_s2, log_beta, prior)
        prop = theta + math.exp(ls.rwmh_log_scale[m]) * rng.standard_normal()
        there = _alpha_log_target(prop, k, sum_log_s2, log_beta, prior)
        accept_prob = math.exp(min(0.0, there - here))
        accepted = rng.random() < accept_prob
        if accepted:
            ls.mix.alpha[m] = 1.0 + math.exp(prop)
        if adapt:
            ls.adapt_steps[m] += 1.0
            step = scfg.adapt_rate / ls.adapt_steps[m] ** scfg.adapt_power
            ls.rwmh_log_scale[m] += step * (accept_prob - scfg.target_accept)
        else:
            ls.rwmh_trials[m] += 1.0
            ls.rwmh_accepts[m] += 1.0 if accepted else 0.0


def _update_beta_layer(ls: LayerState, prior: PriorConfig,
                       rng: np.random.Generator) -> None:
    for m in range(ls.mix.beta.size):
        sel = ls.alloc.comp_sigma == m
        k = int(sel.sum())
        sum_inv = float((1.0 / ls.sigma2[sel]).sum())
        ls.mix.beta[m] = rng.gamma(prior.a3 + ls.mix.alpha[m] * k,
                                   1.0 / (prior.b3 + sum_inv))


def canonicalize_layer(ls: LayerState) -> None:
    """Restore the component-ordering identification by sort-and-relabel."""
    sort_b_components(ls.mix, ls.alloc.comp_b)
    sort_sigma_components(ls.mix, ls.alloc.comp_sigma,
                          extras=[ls.rwmh_log_scale, ls.rwmh_accepts,
                                  ls.rwmh_trials, ls.adapt_steps])


def sweep_layer(ls: LayerState, y: np.ndarray, w: np.ndarray, f: np.ndarray,
                prior: PriorConfig, scfg: SamplerConfig,
                rng: np.random.Generator, adapt: bool) -> None:
    """One full Gibbs sweep of a single layer."""
    resid = _update_b_layer(ls, y, w, f, rng)
    _update_sigma2_layer(ls, resid, w, rng)
    _update_alloc_b_layer(ls, rng)
    _update_alloc_sigma_layer(ls, rng)
    _update_weights_layer(ls, prior, rng)
    _update_mu_layer(ls, prior, rng)
    _update_gamma2_layer(ls, prior, rng)
    _update_alpha_layer(ls, prior, scfg, rng, adapt)
    _update_beta_layer(ls, prior, rng)
    canonicalize_layer(ls)


# ---------------------------------------------------------------------------
# Whole-state wrappers: apply one conditional update across all layers with a
# shared stream, in the fixed layer order.
# ---------------------------------------------------------------------------

def update_b(state: ChainState, panel: MultilayerPanel, factors: FactorSeries,
             rng: np.random.Generator) -> None:
    w = valid_weights(panel)
    for lk in LAYERS:
        _update_b_layer(state.layers[lk], panel.layers[lk], w[lk],
                        factors.values, rng)


def update_sigma2(state: ChainState, panel: MultilayerPanel,
                  factors: FactorSeries, rng: np.random.Generator) -> None:
    w = valid_weights(panel)
    for lk in LAYERS:
        ls = state.layers[lk]
        resid = w[lk] * (panel.layers[lk] - layer_mean(ls.b, factors.values))
        _update_sigma2_layer(ls, resid, w[lk], rng)


def update_alloc_b(state: ChainState, rng: np.random.Generator) -> None:
    for lk in LAYERS:
        _update_alloc_b_layer(state.layers[lk], rng)


def update_alloc_sigma(state: ChainState, rng: np.random.Generator) -> None:
    for lk in LAYERS:
        _update_alloc_sigma_layer(state.layers[lk], rng)


def update_weights(state: ChainState, prior: PriorConfig,
                   rng: np.random.Generator) -> None:
    for lk in LAYERS:
        _update_weights_layer(state.layers[lk], prior, rng)


def update_mu(state: ChainState, prior: PriorConfig,
              rng: np.random.Generator) -> None:
    for lk in LAYERS:
        _update_mu_layer(state.layers[lk], prior, rng)


def update_gamma2(state: ChainState, prior: PriorConfig,
                  rng: np.random.Generator) -> None:
    for lk in LAYERS:
        _update_gamma2_layer(state.layers[lk], prior, rng)


def update_alpha(state: ChainState, prior: PriorConfig, scfg: SamplerConfig,
                 rng: np.random.Generator, adapt: bool = False) -> None:
    for lk in LAYERS:
        _update_alpha_layer(state.layers[lk], prior, scfg, rng, adapt)


def update_beta(state: ChainState, prior: PriorConfig,
                rng: np.random.Generator) -> None:
    for lk in LAYERS:
        _update_beta_layer(state.layers[lk], prior, rng)


def gibbs_sweep(state: ChainState, panel: MultilayerPanel,
                factors: FactorSeries, prior: PriorConfig,
                scfg: SamplerConfig, rng: np.random.Generator,
                adapt: bool = False) -> None:
    w = valid_weights(panel)
    for lk in LAYERS:
        sweep_layer(state.layers[lk], panel.layers[lk], w[lk], factors.values,
                    prior, scfg, rng, adapt)
    state.iteration += 1


# ---------------------------------------------------------------------------
# Full chains.
# ---------------------------------------------------------------------------

def _run_layer(lk: tuple[int, int], y: np.ndarray, w: np.ndarray,
               f: np.ndarray, prior: PriorConfig, scfg: SamplerConfig,
               seed: np.random.SeedSequence) -> LayerDraws:
    rng = np.random.default_rng(seed)
    n = y.shape[1]
    ls = new_layer_state(prior, n, f.shape[1], rng)
    saved = scfg.n_saved
    out = LayerDraws(
        b=np.empty((saved,) + ls.b.shape),
        sigma2=np.empty((saved, n)),
        p=np.empty((saved, prior.m_b)),
        q=np.empty((saved, prior.m_sigma)),
        mu=np.empty((saved, prior.m_b)),
        gamma2=np.empty((saved, prior.m_b)),
        alpha=np.empty((saved, prior.m_sigma)),
        beta=np.empty((saved, prior.m_sigma)),
        accept_rate=np.zeros(prior.m_sigma))
    k = 0
    for g in range(1, scfg.n_iter + 1):
        sweep_layer(ls, y, w, f, prior, scfg, rng, adapt=g <= scfg.n_burn)
        if g > scfg.n_burn and (g - scfg.n_burn) % scfg.thin == 0:
            out.b[k] = ls.b
            out.sigma2[k] = ls.sigma2
            out.p[k] = ls.mix.p
            out.q[k] = ls.mix.q
            out.mu[k] = ls.mix.mu
            out.gamma2[k] = ls.mix.gamma2
            out.alpha[k] = ls.mix.alpha
            out.beta[k] = ls.mix.beta
            k += 1
    with np.errstate(invalid="ignore"):
        out.accept_rate = np.where(ls.rwmh_trials > 0,
                                   ls.rwmh_accepts / np.maximum(ls.rwmh_trials, 1.0),
                                   np.nan)
    return out


def run_chain(panel: MultilayerPanel, factors: FactorSeries,
              prior: PriorConfig, scfg: SamplerConfig,
              threads: int = 1) -> PosteriorDraws:
    """Run the per-layer Gibbs chains and collect thinned post-burn draws.

    Layer draws depend only on that layer's spawned stream, so any thread
    count yields identical output.
    """
    panel.validate()
    factors.validate()
    prior.validate()
    scfg.validate()
    if factors.n_periods != panel.n_periods:
        raise ValueError("factor rows must match panel slices")
    w = valid_weights(panel)
    children = np.random.SeedSequence(scfg.seed).spawn(len(LAYERS))
    jobs = [(lk, panel.layers[lk], w[lk], factors.values, prior, scfg, child)
            for lk, child in zip(LAYERS, children)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda args: _run_layer(*args), jobs))
    else:
        results = [_run_layer(*args) for args in jobs]
    saved = [scfg.n_burn + (i + 1) * scfg.thin for i in range(scfg.n_saved)]
    return PosteriorDraws(layers=dict(zip(LAYERS, results)),
                          saved_iterations=saved, prior=prior, sampler=scfg)


# ---------------------------------------------------------------------------
# Joint density evaluation (for finiteness checks and debugging).
# ---------------------------------------------------------------------------

def _gamma_logpdf(x: float, shape: float, scale: float) -> float:
    return ((shape - 1.0) * math.log(x) - x / scale
            - shape * math.log(scale) - gammaln(shape))


def _dirichlet_logpdf(w: np.ndarray, conc: float) -> float:
    k = w.size
    return float((conc - 1.0) * np.sum(np.log(w))
                 + gammaln(k * conc) - k * gammaln(conc))


def log_posterior(state: ChainState, panel: MultilayerPanel,
                  factors: FactorSeries, prior: PriorConfig) -> float:
    """Unnormalized log joint density at the current state.

    Likelihood plus every prior layer of the hierarchy; finite whenever the
    state satisfies its invariants.
    """
    from .matnorm import model_loglik

    total = model_loglik(panel, state.params(), factors)
    log_trunc = math.log1p(-float(gammainc(prior.a2, 1.0 / prior.b2)))
    for lk in LAYERS:
        ls = state.layers[lk]
        mix, alloc = ls.mix, ls.alloc
        sel = alloc.comp_b >= 0
        comp = alloc.comp_b[sel]
        total += float(np.sum(normal_logpdf(ls.b[sel], mix.mu[comp],
                                            mix.gamma2[comp])))
        total += float(np.sum(np.log(mix.p[comp])))
        total += float(np.sum(invgamma_logpdf(ls.sigma2,
                                              mix.alpha[alloc.comp_sigma],
                                              mix.beta[alloc.comp_sigma])))
        total += float(np.sum(np.log(mix.q[alloc.comp_sigma])))
        total += _dirichlet_logpdf(mix.p, prior.phi_b)
        total += _dirichlet_logpdf(mix.q, prior.phi_sigma)
        total += float(np.sum(normal_logpdf(mix.mu[1:], 0.0, prior.s2)))
        total += _gamma_logpdf(float(mix.gamma2[0]), prior.a0, prior.b0)
        total += float(np.sum(invgamma_logpdf(mix.gamma2[1:], prior.a1,
                                              prior.b1)))
        for m in range(mix.alpha.size):
            total += (_gamma_logpdf(float(mix.alpha[m]), prior.a2, prior.b2)
                      - log_trunc)
            total += _gamma_logpdf(float(mix.beta[m]), prior.a3,
                                   1.0 / prior.b3)
    return total
