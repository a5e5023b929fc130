"""Rolling pairwise lead-lag extraction from weekly OHLC panels.

Signals: weekly log returns from total-return closes, and weekly range-based
variance estimates from open/high/low/close log prices. For every rolling
window and ordered firm pair, a bivariate VAR with intercept is fit per
equation by least squares and the cross-lag block is F-tested; the p-value of
"j leads i" lands in cell (i, j). Within-signal tests fill the return and
volatility layers; one mixed fit per ordered pair fills both cross layers.
Low p-values mean stronger evidence, so p-value panels are mapped to model
responses by a strictly increasing transform after clipping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .matnorm import LAYERS, MultilayerPanel, offdiag_mask

TRANSFORMS = ("probit", "logit", "identity")


@dataclass(frozen=True)
class GrangerConfig:
    window: int = 104
    step: int = 1
    lag: int = 1
    transform: str = "probit"
    clip_eps: float = 1e-6

    def validate(self) -> None:
        if self.lag < 1:
            raise ValueError("lag must be at least 1")
        if self.window - self.lag < 2 * self.lag + 2:
            raise ValueError("window too short for the lag order")
        if self.step < 1:
            raise ValueError("step must be at least 1")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}")
        if not (0.0 < self.clip_eps < 0.5):
            raise ValueError("clip_eps must lie in (0, 0.5)")


@dataclass
class PricePanel:
    """Weekly log-price panel; arrays are (n_firms, n_weeks), NaN = missing."""

    log_open: np.ndarray
    log_high: np.ndarray
    log_low: np.ndarray
    log_close: np.ndarray
    log_total_return: np.ndarray
    dates: list[str]
    labels: list[str]
    sectors: list[str]

    @property
    def n_firms(self) -> int:
        return self.log_close.shape[0]

    @property
    def n_weeks(self) -> int:
        return self.log_close.shape[1]

    def validate(self) -> None:
        shape = self.log_close.shape
        for name in ("log_open", "log_high", "log_low", "log_total_return"):
            if getattr(self, name).shape != shape:
                raise ValueError("price arrays must share a shape")
        if len(self.dates) != shape[1] or len(self.labels) != shape[0]:
            raise ValueError("date/label counts do not match arrays")
        if self.n_weeks < 2:
            raise ValueError("need at least two weeks of prices")
        ok = np.isfinite(self.log_high)
        bad = (ok & ((self.log_high < np.fmax(self.log_open, self.log_close))
                     | (self.log_low > np.fmin(self.log_open, self.log_close))))
        if np.any(bad):
            raise ValueError("high/low must bound open and close")


@dataclass
class SignalPanel:
    """Aligned weekly return and variance signals, (n_firms, n_weeks)."""

    returns: np.ndarray
    variance: np.ndarray
    dates: list[str]
    labels: list[str]
    sectors: list[str]
    floored: np.ndarray = field(default=None)  # cells where the range formula went negative

    @property
    def n_firms(self) -> int:
        return self.returns.shape[0]

    @property
    def n_weeks(self) -> int:
        return self.returns.shape[1]


def compute_returns(log_total_return: np.ndarray) -> np.ndarray:
    """Weekly log returns: first differences along time (n, T) -> (n, T-1)."""
    arr = np.asarray(log_total_return, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError("need a (n, T) array with T >= 2")
    return np.diff(arr, axis=1)


def garman_klass(log_open, log_high, log_low, log_close):
    """Range-based weekly variance estimate from log prices.

    Elementwise; can be slightly negative for unusual bar shapes (callers
    floor at zero). A degenerate bar (all four prices equal) gives exactly 0.
    """
    o = np.asarray(log_open, dtype=float)
    h = np.asarray(log_high, dtype=float)
    lo = np.asarray(log_low, dtype=float)
    c = np.asarray(log_close, dtype=float)
    hl = h - lo
    co = c - o
    cross = co * (h + lo - 2.0 * o) - 2.0 * (h - o) * (lo - o)
    return 0.511 * (hl * hl) - 0.383 * (co * co) - 0.019 * cross


def extract_signals(prices: PricePanel) -> SignalPanel:
    """Aligned return and variance panels on weeks 2..T of the price panel."""
    prices.validate()
    rets = compute_returns(prices.log_total_return)
    raw = garman_klass(prices.log_open, prices.log_high, prices.log_low,
                       prices.log_close)[:, 1:]
    floored = raw < 0.0
    variance = np.where(floored, 0.0, raw)
    return SignalPanel(returns=rets, variance=variance,
                       dates=list(prices.dates[1:]), labels=list(prices.labels),
                       sectors=list(prices.sectors),
                       floored=np.asarray(floored, dtype=bool))


@dataclass
class GrangerResult:
    """P-values from one bivariate fit of (x, y)."""

    p_y_to_x: float
    p_x_to_y: float
    degenerate: bool


def _lag_matrix(series: np.ndarray, lag: int) -> np.ndarray:
    t = series.size
    return np.column_stack([series[lag - k - 1:t - k - 1] for k in range(lag)])


def _ssr(design: np.ndarray, response: np.ndarray) -> float:
    coef, _, _, _ = np.linalg.lstsq(design, response, rcond=None)
    resid = response - design @ coef
    return float(resid @ resid)


def pairwise_granger(x: np.ndarray, y: np.ndarray, lag: int) -> GrangerResult:
    """Cross-lag F-tests for a bivariate VAR(lag) with intercept.

    Rows with any missing value in the lag frame are dropped listwise. A
    rank-deficient design (constant series, too few rows) marks the pair
    degenerate with both p-values 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-D and equally long")
    m = lag
    if x.size < 3 * m + 2:
        return GrangerResult(1.0, 1.0, True)

    resp_x = x[m:]
    resp_y = y[m:]
    ones = np.ones(x.size - m)
    x_lags = _lag_matrix(x, m)
    y_lags = _lag_matrix(y, m)
    frame = np.column_stack([resp_x, resp_y, ones, x_lags, y_lags])
    keep = np.all(np.isfinite(frame), axis=1)
    t_eff = int(keep.sum())
    dof = t_eff - 2 * m - 1
    if dof < 1:
        return GrangerResult(1.0, 1.0, True)
    frame = frame[keep]
    resp_x, resp_y = frame[:, 0], frame[:, 1]
    full = frame[:, 2:]
    own_x = frame[:, 2:3 + m]                       # intercept + x lags
    own_y = np.column_stack([frame[:, 2], frame[:, 3 + m:]])

    if np.linalg.matrix_rank(full) < 2 * m + 1:
        return GrangerResult(1.0, 1.0, True)

    out = []
    for resp, own in ((resp_x, own_x), (resp_y, own_y)):
        ssr_u = _ssr(full, resp)
        ssr_r = _ssr(own, resp)
        if ssr_u <= 0.0:
            out.append(0.0 if ssr_r > 0.0 else 1.0)
            continue
        f_stat = ((ssr_r - ssr_u) / m) / (ssr_u / dof)
        out.append(float(stats.f.sf(max(f_stat, 0.0), m, dof)))
    return GrangerResult(p_y_to_x=out[0], p_x_to_y=out[1], degenerate=False)


def transform_pvalues(p: np.ndarray, kind: str, clip_eps: float) -> np.ndarray:
    """Strictly increasing map of clipped p-values onto the response scale."""
    if kind not in TRANSFORMS:
        raise ValueError(f"unknown transform {kind!r}")
    q = np.clip(p, clip_eps, 1.0 - clip_eps)
    if kind == "probit":
        return stats.norm.ppf(q)
    if kind == "logit":
        return np.log(q / (1.0 - q))
    return q


def invert_transform(values: np.ndarray, kind: str) -> np.ndarray:
    """Map response-scale values back to the p-value scale (up to clipping)."""
    if kind not in TRANSFORMS:
        raise ValueError(f"unknown transform {kind!r}")
    v = np.asarray(values, dtype=float)
    if kind == "probit":
        return stats.norm.cdf(v)
    if kind == "logit":
        return 1.0 / (1.0 + np.exp(-v))
    return np.clip(v, 0.0, 1.0)


def n_slices(n_weeks: int, config: GrangerConfig) -> int:
    """Rolling slice count: floor((T - window) / step) + 1."""
    if n_weeks < config.window:
        return 0
    return (n_weeks - config.window) // config.step + 1


@dataclass
class ExtractionResult:
    """Transformed panel plus the raw p-value stacks behind it."""

    panel: MultilayerPanel
    pvals: dict[tuple[int, int], np.ndarray]
    config: GrangerConfig


def build_multilayer_panel(signals: SignalPanel,
                           config: GrangerConfig) -> ExtractionResult:
    """Rolling pairwise tests over the signal panel, all four layers.

    Slice s covers signal weeks [s*step, s*step + window) and is dated by the
    window's last week. Degenerate fits flag their cells: NaN in the p-value
    stack, sentinel 0 in the transformed panel, True in panel.flags.
    """
    config.validate()
    n = signals.n_firms
    s_count = n_slices(signals.n_weeks, config)
    if s_count == 0:
        raise ValueError("signal panel shorter than one window")
    if n < 2:
        raise ValueError("need at least two firms")

    pvals = {lk: np.full((s_count, n, n), np.nan) for lk in LAYERS}
    flags = {lk: np.zeros((s_count, n, n), dtype=bool) for lk in LAYERS}
    dates = []
    m = config.lag
    for s in range(s_count):
        lo = s * config.step
        hi = lo + config.window
        dates.append(signals.dates[hi - 1])
        rets = signals.returns[:, lo:hi]
        var = signals.variance[:, lo:hi]
        for i in range(n):
            for j in range(i + 1, n):
                res = pairwise_granger(rets[i], rets[j], m)
                _store(pvals, flags, (1, 1), s, i, j, res)
                res = pairwise_granger(var[i], var[j], m)
                _store(pvals, flags, (2, 2), s, i, j, res)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                res = pairwise_granger(rets[i], var[j], m)
                if res.degenerate:
                    flags[(1, 2)][s, i, j] = True
                    flags[(2, 1)][s, j, i] = True
                else:
                    pvals[(1, 2)][s, i, j] = res.p_y_to_x
                    pvals[(2, 1)][s, j, i] = res.p_x_to_y

    layers = {}
    for lk in LAYERS:
        vals = np.zeros_like(pvals[lk])
        good = np.isfinite(pvals[lk])
        vals[good] = transform_pvalues(pvals[lk][good], config.transform,
                                       config.clip_eps)
        layers[lk] = vals
    panel = MultilayerPanel(layers=layers, dates=dates,
                            node_labels=list(signals.labels),
                            sectors=list(signals.sectors), flags=flags)
    panel.validate()
    return ExtractionResult(panel=panel, pvals=pvals, config=config)


def _store(pvals: dict, flags: dict, lk: tuple[int, int], s: int, i: int,
           j: int, res: GrangerResult) -> None:
    if res.degenerate:
        flags[lk][s, i, j] = True
        flags[lk][s, j, i] = True
    else:
        pvals[lk][s, i, j] = res.p_y_to_x
        pvals[lk][s, j, i] = res.p_x_to_y


def density(pval_slice: np.ndarray, level: float) -> float:
    """Share of possible directed edges with p-value at or below `level`.

    Flagged (NaN) cells never count as edges; the denominator is always
    n(n-1).
    """
    n = pval_slice.shape[0]
    off = offdiag_mask(n)
    vals = pval_slice[off]
    hits = int(np.sum(np.isfinite(vals) & (vals <= level)))
    return hits / (n * (n - 1))
