"""Interval, sector, impact, and centrality analytics against oracles."""

import itertools
import math

import numpy as np
import pytest

from matnet import (LAYERS, adjacency_from_pvals, betweenness, degree, hpdi,
                    impact_aggregates, sector_net_effects, summarize_edges,
                    tercile_movers)


def _hpdi_oracle(draws, level):
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    k = math.ceil(level * n)
    widths = [x[j + k - 1] - x[j] for j in range(n - k + 1)]
    wmin = min(widths)
    center = (n - k) / 2.0
    best = min((abs(j - center), j) for j, w in enumerate(widths)
               if w == wmin)[1]
    return float(x[best]), float(x[best + k - 1])


def test_hpdi_matches_brute_force_on_random_draws():
    rng = np.random.default_rng(70)
    for _ in range(200):
        n = int(rng.integers(3, 60))
        draws = rng.standard_normal(n) * rng.uniform(0.1, 5)
        for level in (0.5, 0.8, 0.95):
            assert hpdi(draws, level) == _hpdi_oracle(draws, level)


def test_hpdi_symmetric_grid_tie_breaks_centrally():
    assert hpdi(np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), 0.55) == (-1.0, 1.0)


def test_hpdi_constant_draws():
    assert hpdi(np.full(20, 3.25), 0.95) == (3.25, 3.25)


def test_hpdi_rejects_bad_inputs():
    with pytest.raises(ValueError):
        hpdi(np.array([]), 0.95)
    with pytest.raises(ValueError):
        hpdi(np.array([1.0, 2.0]), 1.0)


def _draws_dict(arr):
    return {lk: arr for lk in LAYERS}


def test_summarize_edges_significance_anchors():
    rng = np.random.default_rng(71)
    n, s, r = 3, 400, 2
    draws = np.zeros((s, r, n, n))
    draws[:, 0, 0, 1] = rng.uniform(0.5, 1.5, s)     # clearly positive
    draws[:, 0, 1, 0] = rng.standard_normal(s)        # symmetric around zero
    draws[:, 1, 2, 0] = rng.uniform(-1.5, -0.5, s)    # clearly negative
    summary = summarize_edges(_draws_dict(draws), 0.95, ["f1", "f2"],
                              ["A", "B", "C"], ["x", "y", "z"])
    lk = LAYERS[0]
    assert summary.significant[lk][0, 0, 1]
    assert not summary.significant[lk][0, 1, 0]
    assert summary.significant[lk][1, 2, 0]
    assert summary.mean[lk][0, 0, 1] == pytest.approx(
        draws[:, 0, 0, 1].mean())
    assert not summary.significant[lk][0, 0, 0]  # diagonal never flagged
    assert summary.lower[lk][0, 0, 1] <= summary.upper[lk][0, 0, 1]


def test_significance_monotone_in_level():
    rng = np.random.default_rng(72)
    draws = rng.standard_normal((600, 1, 2, 2)) + 0.08
    wide = summarize_edges(_draws_dict(draws), 0.99, ["f1"], ["A", "B"],
                           ["x", "y"])
    narrow = summarize_edges(_draws_dict(draws), 0.9, ["f1"], ["A", "B"],
                             ["x", "y"])
    lk = LAYERS[0]
    # significant with the wider interval implies significant with the narrower
    assert np.all(narrow.significant[lk][wide.significant[lk]])


def test_sector_net_effects_anchors_and_oracle():
    n = 4
    sectors = ["fin", "fin", "tech", "tech"]
    zero = sector_net_effects(np.zeros((n, n)), np.zeros((n, n), bool),
                              sectors)[1]
    assert np.all(zero == 0)

    mean = np.zeros((n, n))
    sig = np.zeros((n, n), dtype=bool)
    mean[0, 2] = -0.4  # tech raises fin edge probability
    sig[0, 2] = True
    names, net = sector_net_effects(mean, sig, sectors)
    assert names == ["fin", "tech"]
    assert net[names.index("fin"), names.index("tech")] == 1
    assert net.sum() == 1

    rng = np.random.default_rng(73)
    mean = rng.standard_normal((n, n))
    sig = rng.random((n, n)) < 0.5
    names, net = sector_net_effects(mean, sig, sectors)
    want = np.zeros_like(net)
    for i in range(n):
        for j in range(n):
            if i != j and sig[i, j]:
                a = names.index(sectors[i])
                b = names.index(sectors[j])
                want[a, b] += 1 if mean[i, j] < 0 else -1
    assert np.array_equal(net, want)


def test_impact_aggregates_anchors_and_oracle():
    n = 3
    empty = impact_aggregates(np.zeros((n, n)), np.zeros((n, n), bool))
    assert all(np.all(v == 0) for v in empty.values())

    mean = np.zeros((n, n))
    sig = np.zeros((n, n), dtype=bool)
    mean[0, 1] = -0.3
    sig[0, 1] = True
    agg = impact_aggregates(mean, sig)
    assert agg["in_neg"][0] == pytest.approx(-0.3)
    assert agg["out_neg"][1] == pytest.approx(-0.3)
    assert agg["in_pos"][0] == 0.0 and agg["out_pos"][1] == 0.0
    assert np.allclose(agg["btw_neg"], agg["in_neg"] + agg["out_neg"])

    rng = np.random.default_rng(74)
    mean = rng.standard_normal((5, 5))
    sig = rng.random((5, 5)) < 0.6
    agg = impact_aggregates(mean, sig)
    for node in range(5):
        in_pos = sum(mean[node, j] for j in range(5)
                     if j != node and sig[node, j] and mean[node, j] > 0)
        out_neg = sum(mean[i, node] for i in range(5)
                      if i != node and sig[i, node] and mean[i, node] < 0)
        assert agg["in_pos"][node] == pytest.approx(in_pos)
        assert agg["out_neg"][node] == pytest.approx(out_neg)
        assert agg["btw_pos"][node] == pytest.approx(
            agg["in_pos"][node] + agg["out_pos"][node])


def test_adjacency_from_pvals_threshold_and_nan():
    p = np.array([[np.nan, 0.001, 0.5],
                  [0.01, np.nan, np.nan],
                  [0.0, 0.2, np.nan]])
    adj = adjacency_from_pvals(p, 0.01)
    want = np.array([[False, True, False],
                     [True, False, False],
                     [True, False, False]])
    assert np.array_equal(adj, want)


def test_degree_anchors_and_oracle():
    n = 4
    empty = degree(np.zeros((n, n), dtype=bool))
    assert all(np.all(v == 0) for v in empty.values())
    complete = ~np.eye(n, dtype=bool)
    assert np.all(degree(complete)["total"] == 2 * (n - 1))

    rng = np.random.default_rng(75)
    adj = rng.random((n, n)) < 0.4
    np.fill_diagonal(adj, False)
    deg = degree(adj)
    for v in range(n):
        assert deg["in"][v] == adj[v, :].sum()
        assert deg["out"][v] == adj[:, v].sum()


def _betweenness_oracle(adj):
    """Exhaustive shortest-path enumeration; edge u -> v iff adj[v, u]."""
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[:, u]).tolist() for u in range(n)]
    score = np.zeros(n)
    for s in range(n):
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for v in succ[u]:
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt

        def paths(u, t):
            if u == t:
                return [[t]]
            out = []
            for v in succ[u]:
                if dist.get(v, -1) == dist[u] + 1 and dist.get(t, -1) >= dist[v]:
                    out += [[u] + rest for rest in paths(v, t)]
            return out

        for t in dist:
            if t == s:
                continue
            all_paths = paths(s, t)
            if not all_paths:
                continue
            for p in all_paths:
                for interior in p[1:-1]:
                    score[interior] += 1.0 / len(all_paths)
    return score


def test_betweenness_path_and_complete_anchors():
    # a -> b -> c: only b carries a shortest path
    adj = np.zeros((3, 3), dtype=bool)
    adj[1, 0] = True  # a -> b
    adj[2, 1] = True  # b -> c
    assert np.allclose(betweenness(adj), [0.0, 1.0, 0.0])
    complete = ~np.eye(4, dtype=bool)
    assert np.allclose(betweenness(complete), 0.0)


def test_betweenness_all_three_node_digraphs():
    cells = [(i, j) for i in range(3) for j in range(3) if i != j]
    for bits in itertools.product([False, True], repeat=6):
        adj = np.zeros((3, 3), dtype=bool)
        for (i, j), b in zip(cells, bits):
            adj[i, j] = b
        assert np.allclose(betweenness(adj), _betweenness_oracle(adj),
                           atol=1e-12)


def test_betweenness_random_digraphs_up_to_eight_nodes():
    rng = np.random.default_rng(76)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        adj = rng.random((n, n)) < rng.uniform(0.1, 0.6)
        np.fill_diagonal(adj, False)
        assert np.allclose(betweenness(adj), _betweenness_oracle(adj),
                           atol=1e-9)


def test_tercile_movers_anchors():
    same = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    assert not tercile_movers(same, same).any()

    before = np.array([0.0, 5.0, 5.0, 5.0, 9.0, 9.0])
    after = np.array([9.0, 5.0, 5.0, 5.0, 0.0, 0.0])
    movers = tercile_movers(before, after)
    assert movers[0] and movers.sum() == 1


def test_tercile_movers_tie_handling_matches_quantile_rule():
    rng = np.random.default_rng(77)
    before = np.round(rng.random(30), 1)  # plenty of boundary ties
    after = np.round(rng.random(30), 1)
    movers = tercile_movers(before, after)
    lo = np.quantile(before, 1 / 3)
    hi = np.quantile(after, 2 / 3)
    want = (before <= lo) & (after > hi)
    assert np.array_equal(movers, want)
