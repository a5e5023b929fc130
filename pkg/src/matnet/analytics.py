"""Posterior summaries and network analytics.

Sign convention: the response is an increasing transform of a causality
p-value, so a negative coefficient means the factor strengthens the evidence
for the edge (raises its probability of being present), and a positive one
weakens it. Reporting helpers here keep the raw signed values; presentation
layers are responsible for labeling the inversion.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import ceil

import numpy as np

from .matnorm import LAYERS, offdiag_mask


def hpdi(draws: np.ndarray, level: float) -> tuple[float, float]:
    """Shortest interval spanning ceil(level * N) order statistics.

    Among equal-width candidates the most central window wins; with
    continuous draws ties have probability zero.
    """
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("need at least one draw")
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    k = ceil(level * n)
    widths = x[k - 1:] - x[:n - k + 1]
    lo = np.min(widths)
    candidates = np.flatnonzero(widths == lo)
    center = (n - k) / 2.0
    j = int(candidates[np.argmin(np.abs(candidates - center))])
    return float(x[j]), float(x[j + k - 1])


def _hpdi_stack(draws: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized shortest intervals along axis 0."""
    x = np.sort(draws, axis=0)
    n = x.shape[0]
    k = ceil(level * n)
    widths = x[k - 1:] - x[:n - k + 1]
    wmin = widths.min(axis=0, keepdims=True)
    idx = np.arange(widths.shape[0]).reshape((-1,) + (1,) * (draws.ndim - 1))
    center = (n - k) / 2.0
    tie_rank = np.abs(idx - center) + 1e12 * (widths > wmin)
    j = np.argmin(tie_rank, axis=0)
    lower = np.take_along_axis(x, j[None], axis=0)[0]
    upper = np.take_along_axis(x, (j + k - 1)[None], axis=0)[0]
    return lower, upper


@dataclass
class PosteriorSummary:
    """Edge-level posterior summaries per layer; arrays are (R, n, n)."""

    mean: dict[tuple[int, int], np.ndarray]
    lower: dict[tuple[int, int], np.ndarray]
    upper: dict[tuple[int, int], np.ndarray]
    significant: dict[tuple[int, int], np.ndarray]
    level: float
    factor_names: list[str]
    node_labels: list[str]
    sectors: list[str]


def summarize_edges(draws_by_layer: dict[tuple[int, int], np.ndarray],
                    level: float, factor_names: list[str],
                    node_labels: list[str],
                    sectors: list[str]) -> PosteriorSummary:
    """Posterior mean, interval, and significance per coefficient.

    draws_by_layer[lk] has shape (S, R, n, n). A coefficient is significant
    when its interval excludes zero; diagonal cells are never significant.
    """
    mean, lower, upper, sig = {}, {}, {}, {}
    for lk in LAYERS:
        d = draws_by_layer[lk]
        n = d.shape[-1]
        off = offdiag_mask(n)
        lo, hi = _hpdi_stack(d, level)
        m = d.mean(axis=0)
        s = (lo > 0.0) | (hi < 0.0)
        s &= off[None, :, :]
        mean[lk], lower[lk], upper[lk], sig[lk] = m, lo, hi, s
    return PosteriorSummary(mean=mean, lower=lower, upper=upper,
                            significant=sig, level=level,
                            factor_names=list(factor_names),
                            node_labels=list(node_labels),
                            sectors=list(sectors))


def sector_net_effects(mean: np.ndarray, significant: np.ndarray,
                       sectors: list[str]) -> tuple[list[str], np.ndarray]:
    """Net significant-effect counts between sector blocks.

    Entry (a, b) counts significant probability-raising (negative)
    coefficients minus probability-lowering (positive) ones over cells whose
    target node sits in sector a and source node in sector b.
    """
    n = mean.shape[0]
    names = sorted(set(sectors))
    index = {s: k for k, s in enumerate(names)}
    out = np.zeros((len(names), len(names)), dtype=int)
    off = offdiag_mask(n)
    for i in range(n):
        for j in range(n):
            if not off[i, j] or not significant[i, j]:
                continue
            a, b = index[sectors[i]], index[sectors[j]]
            out[a, b] += 1 if mean[i, j] < 0.0 else -1
    return names, out


def impact_aggregates(mean: np.ndarray,
                      significant: np.ndarray) -> dict[str, np.ndarray]:
    """Signed sums of significant coefficients touching each node.

    in_* sums over a node's row (edges into it), out_* over its column
    (edges out of it); *_pos collects positive coefficients, *_neg negative
    ones; btw_* is their sum, exactly in_* + out_*.
    """
    n = mean.shape[0]
    off = offdiag_mask(n)
    pos = np.where(off & significant & (mean > 0.0), mean, 0.0)
    neg = np.where(off & significant & (mean < 0.0), mean, 0.0)
    out = {
        "in_pos": pos.sum(axis=1),
        "in_neg": neg.sum(axis=1),
        "out_pos": pos.sum(axis=0),
        "out_neg": neg.sum(axis=0),
    }
    out["btw_pos"] = out["in_pos"] + out["out_pos"]
    out["btw_neg"] = out["in_neg"] + out["out_neg"]
    return out


def adjacency_from_pvals(pval_slice: np.ndarray, threshold: float) -> np.ndarray:
    """Directed adjacency: edge j -> i when cell (i, j) is at or below threshold."""
    adj = np.isfinite(pval_slice) & (pval_slice <= threshold)
    np.fill_diagonal(adj, False)
    return adj


def degree(adj: np.ndarray) -> dict[str, np.ndarray]:
    """In-degree (row sums), out-degree (column sums), and their total."""
    a = adj.astype(int)
    in_deg = a.sum(axis=1)
    out_deg = a.sum(axis=0)
    return {"in": in_deg, "out": out_deg, "total": in_deg + out_deg}


def betweenness(adj: np.ndarray) -> np.ndarray:
    """Directed unweighted betweenness centrality, unnormalized.

    Cell (i, j) encodes the edge j -> i. Accumulates pair dependencies over
    BFS shortest-path DAGs; endpoints are excluded.
    """
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[:, u]).tolist() for u in range(n)]
    scores = np.zeros(n)
    for source in range(n):
        stack: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[source] = 1.0
        dist = np.full(n, -1)
        dist[source] = 0
        queue = deque([source])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != source:
                scores[w] += delta[w]
    return scores


def tercile_movers(before: np.ndarray, after: np.ndarray) -> np.ndarray:
    """Nodes in the bottom tercile before and the top tercile after.

    Tercile boundaries are the empirical 1/3 and 2/3 quantiles of each
    snapshot; boundary ties fall to the lower tercile.
    """
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    if before.shape != after.shape:
        raise ValueError("snapshots must align")
    lo_cut = np.quantile(before, 1.0 / 3.0)
    hi_cut = np.quantile(after, 2.0 / 3.0)
    return (before <= lo_cut) & (after > hi_cut)
