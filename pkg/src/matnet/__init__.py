"""Temporal multilayer causal networks with a matrix-variate factor model.

The package extracts directed weekly networks from firm-level price panels
via rolling pairwise predictive-causality tests, stacks them into four
return/volatility layers, and fits a Bayesian matrix regression with
hierarchical mixture priors that links risk factors to edge intensities.
"""

from .analytics import (PosteriorSummary, adjacency_from_pvals, betweenness,
                        degree, hpdi, impact_aggregates, sector_net_effects,
                        summarize_edges, tercile_movers)
from .geweke import (MONITOR_NAMES, GewekeConfig, GewekeResult, compare,
                     effective_sample_size, monitor, run_chain_side,
                     run_prior_side)
from .gibbs import (ChainState, LayerDraws, PosteriorDraws, SamplerConfig,
                    gibbs_sweep, init_state, log_posterior, run_chain)
from .gig import gig_sample
from .granger import (ExtractionResult, GrangerConfig, PricePanel,
                      SignalPanel, build_multilayer_panel, density,
                      extract_signals, garman_klass, invert_transform,
                      n_slices, pairwise_granger, transform_pvalues)
from .io import (AnalysisConfig, DataError, NumericalError, UsageError,
                 load_config, load_factors, load_panel_dir, load_prices,
                 read_manifest, write_manifest, write_panel)
from .matnorm import (LAYER_BY_NAME, LAYER_NAMES, LAYERS, FactorSeries,
                      ModelParams, MultilayerPanel, layer_mean,
                      matnorm_logpdf, matnorm_sample, model_loglik,
                      offdiag_mask)
from .priors import (Allocations, MixtureParams, PriorConfig,
                     marginal_loglik_small, mixture_logpdf_b, prior_draw,
                     prior_logpdf_b, sort_b_components, sort_sigma_components)
from .simulate import (SyntheticSpec, synthetic_panel, synthetic_prices,
                       weekly_fridays)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig", "Allocations", "ChainState", "DataError",
    "ExtractionResult", "FactorSeries", "GewekeConfig", "GewekeResult",
    "GrangerConfig", "LAYERS", "LAYER_BY_NAME", "LAYER_NAMES", "LayerDraws",
    "MONITOR_NAMES",
    "MixtureParams", "ModelParams", "MultilayerPanel", "NumericalError",
    "PosteriorDraws", "PosteriorSummary", "PricePanel", "PriorConfig",
    "SamplerConfig", "SignalPanel", "SyntheticSpec", "UsageError",
    "adjacency_from_pvals", "betweenness", "build_multilayer_panel",
    "compare", "degree", "density", "effective_sample_size",
    "extract_signals", "garman_klass", "gibbs_sweep", "gig_sample", "hpdi",
    "impact_aggregates", "init_state",
    "invert_transform", "layer_mean", "load_config", "load_factors",
    "load_panel_dir", "load_prices", "log_posterior", "marginal_loglik_small",
    "matnorm_logpdf", "matnorm_sample", "mixture_logpdf_b", "model_loglik",
    "monitor", "n_slices", "offdiag_mask", "pairwise_granger", "prior_draw",
    "prior_logpdf_b", "read_manifest", "run_chain", "run_chain_side",
    "run_prior_side", "sector_net_effects",
    "sort_b_components", "sort_sigma_components", "summarize_edges",
    "synthetic_panel", "synthetic_prices", "tercile_movers",
    "transform_pvalues", "weekly_fridays", "write_manifest", "write_panel",
]
