"""Synthetic data generators: model panels, sparse truths, and OHLC prices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
import pandas as pd

from .matnorm import (LAYERS, FactorSeries, ModelParams, MultilayerPanel,
                      layer_mean, offdiag_mask)

_SECTOR_CYCLE = ("financials", "energy", "tech", "health")


@dataclass(frozen=True)
class SyntheticSpec:
    """Settings for synthetic data generation.

    mode "panel" emits model-space responses directly (with the generating
    coefficients as ground truth); mode "prices" emits an OHLC price panel
    plus factors for the full extraction pipeline. n_periods counts panel
    slices in panel mode and price weeks in prices mode. sparsity is the
    fraction of zero coefficients; nonzero ones are +/- coef_scale.
    """

    mode: str = "panel"
    n_nodes: int = 6
    n_periods: int = 30
    n_factors: int = 2
    sparsity: float = 0.7
    coef_scale: float = 0.5
    noise_scale: float = 0.5
    seed: int = 0
    start_date: str = "2016-01-08"

    def validate(self) -> None:
        if self.mode not in ("panel", "prices"):
            raise ValueError("mode must be 'panel' or 'prices'")
        if self.n_nodes < 2 or self.n_periods < 2 or self.n_factors < 1:
            raise ValueError("dimensions too small")
        if not (0.0 <= self.sparsity <= 1.0):
            raise ValueError("sparsity must lie in [0, 1]")
        if self.coef_scale < 0 or self.noise_scale <= 0:
            raise ValueError("scales must be positive")


def weekly_fridays(start: str, count: int) -> list[str]:
    """ISO dates of `count` consecutive Fridays, first on or after `start`."""
    d = date.fromisoformat(start)
    d = d + timedelta(days=(4 - d.weekday()) % 7)
    return [(d + timedelta(weeks=k)).isoformat() for k in range(count)]


def default_labels(n: int) -> list[str]:
    return [f"N{i:03d}" for i in range(n)]


def default_sectors(n: int) -> list[str]:
    return [_SECTOR_CYCLE[i % len(_SECTOR_CYCLE)] for i in range(n)]


def make_factors(n_periods: int, n_factors: int, rng: np.random.Generator,
                 dates: list[str] | None = None) -> FactorSeries:
    """Standardized iid factor series (each column mean 0, sd 1)."""
    values = rng.standard_normal((n_periods, n_factors))
    values -= values.mean(axis=0)
    values /= values.std(axis=0)
    if dates is None:
        dates = weekly_fridays("2016-01-08", n_periods)
    return FactorSeries(values=values,
                        names=[f"f{k + 1}" for k in range(n_factors)],
                        dates=dates)


def draw_sparse_params(spec: SyntheticSpec,
                       rng: np.random.Generator) -> ModelParams:
    """Ground-truth coefficients: sparse +/- coef_scale, constant noise."""
    n, r = spec.n_nodes, spec.n_factors
    mask = offdiag_mask(n)
    b: dict[tuple[int, int], np.ndarray] = {}
    sigma2: dict[tuple[int, int], np.ndarray] = {}
    for lk in LAYERS:
        nonzero = rng.random((r, n, n)) >= spec.sparsity
        signs = np.where(rng.random((r, n, n)) < 0.5, -1.0, 1.0)
        coef = np.where(nonzero, signs * spec.coef_scale, 0.0)
        coef[:, ~mask] = 0.0
        b[lk] = coef
        sigma2[lk] = np.full(n, spec.noise_scale ** 2)
    return ModelParams(b=b, sigma2=sigma2)


def simulate_panel(params: ModelParams, factors: FactorSeries,
                   rng: np.random.Generator,
                   node_labels: list[str] | None = None,
                   sectors: list[str] | None = None) -> MultilayerPanel:
    """Draw a panel from the observation model at the given parameters.

    Cell (i, j) of each slice gets noise variance sigma2[j]; diagonals hold
    the structural 0.0 sentinel.
    """
    n = params.n_nodes
    t = factors.n_periods
    mask = offdiag_mask(n)
    layers: dict[tuple[int, int], np.ndarray] = {}
    for lk in LAYERS:
        mean = layer_mean(params.b[lk], factors.values)
        noise = rng.standard_normal((t, n, n)) * np.sqrt(params.sigma2[lk])[None, None, :]
        y = mean + noise
        y[:, ~mask] = 0.0
        layers[lk] = y
    return MultilayerPanel(layers=layers, dates=list(factors.dates),
                           node_labels=node_labels or default_labels(n),
                           sectors=sectors or default_sectors(n))


def synthetic_panel(spec: SyntheticSpec
                    ) -> tuple[MultilayerPanel, FactorSeries, ModelParams]:
    """Panel-mode generation: (panel, factors, ground truth)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    dates = weekly_fridays(spec.start_date, spec.n_periods)
    factors = make_factors(spec.n_periods, spec.n_factors, rng, dates)
    truth = draw_sparse_params(spec, rng)
    panel = simulate_panel(truth, factors, rng)
    return panel, factors, truth


def synthetic_prices(spec: SyntheticSpec) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Prices-mode generation: (prices, factors) as long-format frames.

    Weekly log closes follow a cross-coupled VAR(1) so the extraction stage
    finds genuine lead-lag structure; opens gap off the prior close and
    high/low pad the open-close hull, keeping every OHLC tuple valid.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, t = spec.n_nodes, spec.n_periods
    dates = weekly_fridays(spec.start_date, t)
    labels = default_labels(n)
    sectors = default_sectors(n)

    coupling = np.zeros((n, n))
    links = rng.random((n, n)) < 0.25
    np.fill_diagonal(links, False)
    coupling[links] = rng.choice([-0.35, 0.35], size=int(links.sum()))
    np.fill_diagonal(coupling, 0.15)
    radius = float(np.max(np.abs(np.linalg.eigvals(coupling))))
    if radius > 0.8:
        coupling *= 0.8 / radius

    scale = 0.02
    rets = np.zeros((t, n))
    rets[0] = scale * rng.standard_normal(n)
    for k in range(1, t):
        rets[k] = coupling @ rets[k - 1] + scale * rng.standard_normal(n)

    log_close = np.log(50.0) + rng.normal(0.0, 0.3, n) + np.cumsum(rets, axis=0)
    prev_close = np.vstack([log_close[0] - rets[0], log_close[:-1]])
    log_open = prev_close + 0.2 * scale * rng.standard_normal((t, n))
    pad_hi = np.abs(rng.normal(0.0, scale, (t, n)))
    pad_lo = np.abs(rng.normal(0.0, scale, (t, n)))
    log_high = np.maximum(log_open, log_close) + pad_hi
    log_low = np.minimum(log_open, log_close) - pad_lo
    dividend_yield = 0.0004
    log_total = log_close + dividend_yield * np.arange(t)[:, None]

    rows = []
    for i in range(n):
        for k in range(t):
            rows.append({
                "firm_id": labels[i],
                "date": dates[k],
                "sector": sectors[i],
                "open": math.exp(log_open[k, i]),
                "high": math.exp(log_high[k, i]),
                "low": math.exp(log_low[k, i]),
                "close": math.exp(log_close[k, i]),
                "total_return_close": math.exp(log_total[k, i]),
            })
    prices = pd.DataFrame(rows)

    market = rets.mean(axis=1)
    breadth = (rets > 0).mean(axis=1) - 0.5
    extra = np.zeros(t)
    for k in range(1, t):
        extra[k] = 0.6 * extra[k - 1] + rng.normal(0.0, 1.0)
    cols = {"date": dates, "market": market, "breadth": breadth, "funding": extra}
    factors = pd.DataFrame(cols)
    return prices, factors
