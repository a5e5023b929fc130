"""Joint-distribution correctness harness for the Gibbs sampler.

Two simulators target the same joint law of (parameters, data): the
prior-ancestral side draws parameters from the prior and data from the
observation model, independently each time; the successive-conditional side
alternates one Gibbs sweep on the current data with a fresh data draw at the
current parameters. If every full conditional is correct, both sides share
all marginal moments, so standardized differences of monitored functionals
(z-scores with autocorrelation-aware standard errors on the chain side)
stay small. Systematic conditional errors push |z| far beyond any noise band.

Monitored functionals are pooled across the four layers and chosen to have
finite sampling variance under the prior (log transforms where raw moments
can diverge).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gibbs import ChainState, SamplerConfig, gibbs_sweep, new_layer_state
from .matnorm import LAYERS, FactorSeries, MultilayerPanel, offdiag_mask
from .priors import PriorConfig
from .simulate import make_factors, simulate_panel


@dataclass(frozen=True)
class GewekeConfig:
    n_nodes: int = 3
    n_factors: int = 2
    n_periods: int = 20
    prior: PriorConfig = field(default_factory=PriorConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    n_prior: int = 50_000
    n_adapt: int = 4_000
    n_settle: int = 1_000
    n_chain: int = 50_000
    seed: int = 0


MONITOR_NAMES: tuple[str, ...] = (
    "b_mean", "b_var", "log_sigma2_mean", "log_sigma2_var", "p0", "mu1",
    "log_gamma2_0", "log_gamma2_1", "q0", "alpha0", "alpha_last",
    "log_beta0", "log_beta_last", "frac_comp_b0", "frac_comp_sigma0",
    "abs_y_mean", "col_cross", "b_data_cross",
    "b_mean_sq", "log_sigma2_mean_sq", "p0_sq", "q0_sq",
)


def monitor(state: ChainState, panel: MultilayerPanel,
            factors: FactorSeries) -> np.ndarray:
    """Evaluate the monitored functionals, averaged over layers."""
    n = panel.n_nodes
    mask = offdiag_mask(n)
    f = factors.values
    acc = np.zeros(len(MONITOR_NAMES))
    for lk in LAYERS:
        ls = state.layers[lk]
        y = panel.layers[lk]
        b_off = ls.b[:, mask]
        log_s2 = np.log(ls.sigma2)
        y_off = y[:, mask]
        col_ms = np.array([np.mean(y[:, mask[:, j], j] ** 2) for j in range(n)])
        cross = float(np.mean(log_s2 * np.log(col_ms)))
        fy = np.einsum("tr,tij->rij", f, y) / y.shape[0]
        b_cross = float(np.mean(ls.b[:, mask] * fy[:, mask]))
        comp_off = ls.alloc.comp_b[:, mask]
        acc += np.array([
            float(b_off.mean()),
            float(b_off.var()),
            float(log_s2.mean()),
            float(log_s2.var()),
            float(ls.mix.p[0]),
            float(ls.mix.mu[1]),
            float(np.log(ls.mix.gamma2[0])),
            float(np.log(ls.mix.gamma2[1])),
            float(ls.mix.q[0]),
            float(ls.mix.alpha[0]),
            float(ls.mix.alpha[-1]),
            float(np.log(ls.mix.beta[0])),
            float(np.log(ls.mix.beta[-1])),
            float(np.mean(comp_off == 0)),
            float(np.mean(ls.alloc.comp_sigma == 0)),
            float(np.mean(np.abs(y_off))),
            cross,
            b_cross,
            float(b_off.mean()) ** 2,
            float(log_s2.mean()) ** 2,
            float(ls.mix.p[0]) ** 2,
            float(ls.mix.q[0]) ** 2,
        ])
    return acc / len(LAYERS)


def run_prior_side(cfg: GewekeConfig) -> np.ndarray:
    """Independent ancestral draws of (parameters, data), monitored."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[0])
    factors = make_factors(cfg.n_periods, cfg.n_factors,
                           np.random.default_rng(cfg.seed))
    out = np.empty((cfg.n_prior, len(MONITOR_NAMES)))
    for k in range(cfg.n_prior):
        state = _fresh_state(cfg, rng)
        panel = simulate_panel(state.params(), factors, rng)
        out[k] = monitor(state, panel, factors)
    return out


def run_chain_side(cfg: GewekeConfig) -> np.ndarray:
    """Successive-conditional draws: Gibbs sweep then data redraw."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    factors = make_factors(cfg.n_periods, cfg.n_factors,
                           np.random.default_rng(cfg.seed))
    state = _fresh_state(cfg, rng)
    panel = simulate_panel(state.params(), factors, rng)
    for k in range(cfg.n_adapt + cfg.n_settle):
        gibbs_sweep(state, panel, factors, cfg.prior, cfg.sampler, rng,
                    adapt=k < cfg.n_adapt)
        panel = simulate_panel(state.params(), factors, rng)
    out = np.empty((cfg.n_chain, len(MONITOR_NAMES)))
    for k in range(cfg.n_chain):
        gibbs_sweep(state, panel, factors, cfg.prior, cfg.sampler, rng,
                    adapt=False)
        panel = simulate_panel(state.params(), factors, rng)
        out[k] = monitor(state, panel, factors)
    return out


def _fresh_state(cfg: GewekeConfig, rng: np.random.Generator) -> ChainState:
    return ChainState({lk: new_layer_state(cfg.prior, cfg.n_nodes,
                                           cfg.n_factors, rng)
                       for lk in LAYERS})


def effective_sample_size(x: np.ndarray) -> float:
    """Initial-positive-sequence estimate of the effective sample size."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var == 0.0:
        return float(n)
    m = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, m)
    acov = np.fft.irfft(spec * np.conj(spec), m)[:n] / n
    rho = acov / acov[0]
    tau = 0.0
    j = 0
    while 2 * j + 1 < n:
        pair = rho[2 * j] + rho[2 * j + 1]
        if pair <= 0.0:
            break
        tau += pair
        j += 1
    tau = max(2.0 * tau - 1.0, 1.0)
    return float(min(n / tau, n))


@dataclass
class GewekeResult:
    names: tuple[str, ...]
    z: np.ndarray
    prior_mean: np.ndarray
    chain_mean: np.ndarray
    chain_ess: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))


def compare(cfg: GewekeConfig) -> GewekeResult:
    """Run both sides and standardize the differences per functional."""
    prior = run_prior_side(cfg)
    chain = run_chain_side(cfg)
    names = MONITOR_NAMES
    zs = np.empty(len(names))
    ess = np.empty(len(names))
    for k in range(len(names)):
        mp, vp = prior[:, k].mean(), prior[:, k].var(ddof=1)
        mc, vc = chain[:, k].mean(), chain[:, k].var(ddof=1)
        ess[k] = effective_sample_size(chain[:, k])
        se = np.sqrt(vp / prior.shape[0] + vc / ess[k])
        zs[k] = (mp - mc) / se
    return GewekeResult(names=names, z=zs, prior_mean=prior.mean(axis=0),
                        chain_mean=chain.mean(axis=0), chain_ess=ess)
