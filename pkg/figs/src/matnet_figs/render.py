"""Render figures from the network pipeline's CSV tables.

Every renderer reads documented CSV schemas from an input directory and
writes one PNG. Rendering is deterministic: any layout randomness is driven
by an explicit seed, and the written file is byte-stable for fixed inputs
and library versions.

Sign convention used throughout: a NEGATIVE coefficient RAISES edge
probability (the response is a probit-transformed p-value, so pushing it
down makes the causal link more significant). Impact heatmaps therefore
map negative values to blue, matching "blue = positive impact on edge
existence" in the legend.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

_PNG_META = {"Software": "matnet-figs"}

_LINE_STYLES = ("-", "--", "-.", ":")

_SECTOR_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                  "tab:purple", "tab:brown", "tab:pink", "tab:gray")


class SchemaError(Exception):
    """An input table is missing or lacks required columns."""


def _load(in_dir: Path, name: str, required: set[str]) -> pd.DataFrame:
    path = Path(in_dir) / name
    if not path.exists():
        raise SchemaError(f"missing input table {path}")
    try:
        df = pd.read_csv(path)
    except Exception as exc:  # parser failures are schema failures here
        raise SchemaError(f"unreadable table {path}: {exc}") from exc
    missing = sorted(required - set(df.columns))
    if missing:
        raise SchemaError(f"{path} lacks columns {missing}; "
                          f"found {sorted(df.columns)}")
    return df


def _save(fig, out_path: Path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150, metadata=_PNG_META)
    plt.close(fig)


def _sector_color(sector: str, order: list[str]) -> str:
    return _SECTOR_COLORS[order.index(sector) % len(_SECTOR_COLORS)]


def density_timeseries(in_dir: Path, out_path: Path,
                       layers: list[str] | None = None) -> None:
    """Per-layer network density over time (one line per layer)."""
    df = _load(in_dir, "densities.csv",
               {"layer", "date", "level", "density"})
    fig, ax = plt.subplots(figsize=(9, 4.5))
    names = layers or sorted(df["layer"].unique())
    for k, layer in enumerate(names):
        sub = df[df["layer"] == layer]
        ax.plot(sub["date"], sub["density"],
                _LINE_STYLES[k % len(_LINE_STYLES)], label=layer, lw=1.6)
    level = df["level"].iloc[0] if len(df) else float("nan")
    ax.set_ylim(-0.02, 1.02)
    ax.set_ylabel(f"density at {level:g} significance" if len(df)
                  else "density")
    ax.set_xlabel("window end date")
    if len(df):
        step = max(1, df["date"].nunique() // 8)
        ticks = sorted(df["date"].unique())[::step]
        ax.set_xticks(ticks)
    ax.tick_params(axis="x", rotation=45)
    if names:
        ax.legend(frameon=False, ncols=2)
    ax.set_title("Network density by layer")
    fig.tight_layout()
    _save(fig, out_path)


def _symmetric_heatmap(ax, grid: np.ndarray, negative_is_blue: bool):
    """Heat image with a symmetric diverging scale around zero."""
    finite = grid[np.isfinite(grid)]
    vmax = float(np.max(np.abs(finite))) if finite.size else 1.0
    vmax = vmax or 1.0
    cmap = "RdBu_r" if negative_is_blue else "RdBu"
    im = ax.imshow(grid, cmap=cmap, vmin=-vmax, vmax=vmax)
    return im


def coefficient_heatmap(in_dir: Path, out_path: Path, layer: str = "return",
                        factor: str | None = None) -> None:
    """Significant factor coefficients as a node-by-node heat map.

    Blue cells are negative coefficients, i.e. the factor RAISES the edge
    probability of the (row <- column) link; red cells lower it.
    Insignificant cells stay blank.
    """
    df = _load(in_dir, "summary.csv",
               {"layer", "factor", "i", "j", "i_label", "j_label", "mean",
                "significant"})
    if factor is None and len(df):
        factor = sorted(df["factor"].unique())[0]
    sub = df[(df["layer"] == layer) & (df["factor"] == factor)]
    fig, ax = plt.subplots(figsize=(7, 6))
    if len(sub):
        n = int(max(sub["i"].max(), sub["j"].max())) + 1
        grid = np.full((n, n), np.nan)
        sig = sub[sub["significant"].astype(bool)]
        grid[sig["i"].to_numpy(int), sig["j"].to_numpy(int)] = \
            sig["mean"].to_numpy(float)
        labels = [""] * n
        for row in sub.itertuples(index=False):
            labels[int(row.i)] = str(row.i_label)
        im = _symmetric_heatmap(ax, grid, negative_is_blue=True)
        cbar = fig.colorbar(im, ax=ax, fraction=0.046)
        cbar.set_label("coefficient on edge score\n"
                       "(negative = blue = raises edge probability)")
        ax.set_xticks(range(n), labels, rotation=90, fontsize=7)
        ax.set_yticks(range(n), labels, fontsize=7)
    else:
        ax.set_xticks([])
        ax.set_yticks([])
    ax.set_xlabel("cause node (column)")
    ax.set_ylabel("affected node (row)")
    ax.set_title(f"Significant impacts of {factor!r} on {layer} edges\n"
                 f"blue = positive impact on edge existence "
                 f"(negative coefficient)")
    fig.tight_layout()
    _save(fig, out_path)


def sector_block_heatmap(in_dir: Path, out_path: Path,
                         layer: str = "return",
                         factor: str | None = None) -> None:
    """Net sector-to-sector counts of significant impacts.

    Positive net counts (net edge-probability-raising) show blue; negative
    show red.
    """
    df = _load(in_dir, "sector_effects.csv",
               {"layer", "factor", "target_sector", "source_sector", "net"})
    if factor is None and len(df):
        factor = sorted(df["factor"].unique())[0]
    sub = df[(df["layer"] == layer) & (df["factor"] == factor)]
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    if len(sub):
        sectors = sorted(set(sub["target_sector"]) | set(sub["source_sector"]))
        k = len(sectors)
        grid = np.zeros((k, k))
        for row in sub.itertuples(index=False):
            grid[sectors.index(row.target_sector),
                 sectors.index(row.source_sector)] = row.net
        im = _symmetric_heatmap(ax, grid, negative_is_blue=False)
        cbar = fig.colorbar(im, ax=ax, fraction=0.046)
        cbar.set_label("net significant impacts\n"
                       "(blue = net edge-probability-raising)")
        ax.set_xticks(range(k), sectors, rotation=45)
        ax.set_yticks(range(k), sectors)
        for a in range(k):
            for b in range(k):
                ax.text(b, a, f"{grid[a, b]:+.0f}", ha="center", va="center",
                        fontsize=9)
    else:
        ax.set_xticks([])
        ax.set_yticks([])
    ax.set_xlabel("source sector")
    ax.set_ylabel("target sector")
    ax.set_title(f"Sector-block net impacts of {factor!r} ({layer} layer)")
    fig.tight_layout()
    _save(fig, out_path)


def centrality_scatter(in_dir: Path, out_path: Path,
                       layer: str = "return") -> None:
    """Betweenness before vs after, one point per node, sector-colored."""
    df = _load(in_dir, "centrality.csv",
               {"layer", "snapshot", "node", "label", "sector",
                "betweenness"})
    sub = df[df["layer"] == layer]
    fig, ax = plt.subplots(figsize=(6.5, 6))
    before = sub[sub["snapshot"] == "before"].set_index("node")
    after = sub[sub["snapshot"] == "after"].set_index("node")
    common = before.index.intersection(after.index)
    if len(common):
        sectors = sorted(sub["sector"].unique())
        for sector in sectors:
            nodes = [v for v in common if before.loc[v, "sector"] == sector]
            if not nodes:
                continue
            ax.scatter(before.loc[nodes, "betweenness"],
                       after.loc[nodes, "betweenness"],
                       color=_sector_color(sector, sectors), label=sector,
                       s=42, alpha=0.85, edgecolors="black", linewidths=0.4)
        for v in common:
            ax.annotate(str(before.loc[v, "label"]),
                        (before.loc[v, "betweenness"],
                         after.loc[v, "betweenness"]),
                        fontsize=6, xytext=(3, 3),
                        textcoords="offset points")
        top = max(float(before["betweenness"].max()),
                  float(after["betweenness"].max()), 1.0)
        ax.plot([0, top], [0, top], color="gray", lw=0.8, ls=":")
        ax.legend(frameon=False, title="sector")
    ax.set_xlabel("betweenness (before snapshot)")
    ax.set_ylabel("betweenness (after snapshot)")
    ax.set_title(f"Betweenness shift, {layer} layer")
    fig.tight_layout()
    _save(fig, out_path)


def _spring_layout(n: int, edges: np.ndarray, seed: int,
                   iterations: int = 60) -> np.ndarray:
    """Small deterministic force-directed layout (seeded start)."""
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-1, 1, size=(n, 2))
    if n == 1:
        return np.zeros((1, 2))
    k = 1.0 / np.sqrt(n)
    for it in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.maximum(np.linalg.norm(delta, axis=-1), 1e-6)
        repulse = (k * k / dist**2)[:, :, None] * delta
        np.fill_diagonal(repulse[:, :, 0], 0.0)
        np.fill_diagonal(repulse[:, :, 1], 0.0)
        force = repulse.sum(axis=1)
        for u, v in edges:
            d = pos[u] - pos[v]
            dist_uv = max(float(np.linalg.norm(d)), 1e-6)
            pull = dist_uv / k * d / dist_uv
            force[u] -= pull
            force[v] += pull
        step = 0.1 * (1.0 - it / iterations) + 0.01
        length = np.maximum(np.linalg.norm(force, axis=1, keepdims=True),
                            1e-6)
        pos += step * force / length
    pos -= pos.mean(axis=0)
    scale = np.abs(pos).max() or 1.0
    return pos / scale


def network_snapshot(in_dir: Path, out_path: Path, layer: str = "return",
                     snapshot: str = "after", seed: int = 7) -> None:
    """Directed graph snapshot with sector-colored edges (seeded layout)."""
    edges_df = _load(in_dir, "edges.csv",
                     {"layer", "snapshot", "source", "target",
                      "source_sector"})
    cent = _load(in_dir, "centrality.csv",
                 {"layer", "snapshot", "node", "label", "sector"})
    nodes = cent[(cent["layer"] == layer)
                 & (cent["snapshot"] == snapshot)].drop_duplicates("node")
    sub = edges_df[(edges_df["layer"] == layer)
                   & (edges_df["snapshot"] == snapshot)]
    fig, ax = plt.subplots(figsize=(7, 7))
    if len(nodes):
        ids = nodes["node"].to_numpy(int)
        remap = {int(v): k for k, v in enumerate(ids)}
        n = len(ids)
        edge_arr = np.array([[remap[int(r.source)], remap[int(r.target)]]
                             for r in sub.itertuples(index=False)],
                            dtype=int).reshape(-1, 2)
        pos = _spring_layout(n, edge_arr, seed)
        sectors = sorted(nodes["sector"].unique())
        for row, (u, v) in zip(sub.itertuples(index=False), edge_arr):
            color = _sector_color(str(row.source_sector), sectors)
            ax.annotate("", xy=pos[v], xytext=pos[u],
                        arrowprops=dict(arrowstyle="-|>", color=color,
                                        lw=1.0, alpha=0.7,
                                        shrinkA=9, shrinkB=9))
        for k_, node_row in enumerate(nodes.itertuples(index=False)):
            color = _sector_color(str(node_row.sector), sectors)
            ax.scatter(*pos[k_], s=330, color=color, zorder=3,
                       edgecolors="black", linewidths=0.6)
            ax.annotate(str(node_row.label), pos[k_], ha="center",
                        va="center", fontsize=6, zorder=4)
        handles = [plt.Line2D([], [], marker="o", ls="",
                              color=_sector_color(s, sectors), label=s)
                   for s in sectors]
        ax.legend(handles=handles, frameon=False, title="sector (edge = "
                  "source sector)", fontsize=8, loc="upper left")
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title(f"{layer} network, {snapshot} snapshot "
                 f"({len(sub)} edges)")
    fig.tight_layout()
    _save(fig, out_path)


RENDERERS = {
    "density-timeseries": density_timeseries,
    "coefficient-heatmap": coefficient_heatmap,
    "sector-block-heatmap": sector_block_heatmap,
    "centrality-scatter": centrality_scatter,
    "network-snapshot": network_snapshot,
}
