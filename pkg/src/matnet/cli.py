"""Command line pipeline: simulate, extract, estimate, analyze.

Each stage reads CSV/JSON artifacts, writes its outputs plus a manifest into
--out, and validates the hashes of whatever upstream directory it consumes.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from . import io as artifacts
from .analytics import (adjacency_from_pvals, betweenness, degree,
                        impact_aggregates, sector_net_effects,
                        summarize_edges, tercile_movers)
from .gibbs import SamplerConfig, run_chain
from .granger import (GrangerConfig, build_multilayer_panel, density,
                      extract_signals, invert_transform)
from .io import (AnalysisConfig, DataError, NumericalError, UsageError,
                 config_dict, load_config)
from .matnorm import LAYER_NAMES, LAYERS, FactorSeries
from .priors import PriorConfig
from .simulate import SyntheticSpec, synthetic_panel, synthetic_prices


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="matnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate synthetic data")
    sim.add_argument("--config", type=Path)
    sim.add_argument("--out", type=Path, required=True)
    sim.add_argument("--mode", choices=("panel", "prices"))
    sim.add_argument("--n-nodes", type=int)
    sim.add_argument("--n-periods", type=int)
    sim.add_argument("--n-factors", type=int)
    sim.add_argument("--sparsity", type=float)
    sim.add_argument("--seed", type=int)

    ext = sub.add_parser("extract", help="build causality panels from prices")
    ext.add_argument("--config", type=Path)
    ext.add_argument("--out", type=Path, required=True)
    ext.add_argument("--prices", type=Path)
    ext.add_argument("--window", type=int)
    ext.add_argument("--step", type=int)
    ext.add_argument("--lag", type=int)
    ext.add_argument("--transform", choices=("probit", "logit", "identity"))
    ext.add_argument("--clip-eps", type=float)

    est = sub.add_parser("estimate", help="fit the factor regression")
    est.add_argument("--config", type=Path)
    est.add_argument("--out", type=Path, required=True)
    est.add_argument("--panel", type=Path)
    est.add_argument("--factors", type=Path)
    est.add_argument("--iters", type=int)
    est.add_argument("--burn", type=int)
    est.add_argument("--thin", type=int)
    est.add_argument("--seed", type=int)
    est.add_argument("--hpdi", type=float)
    est.add_argument("--threads", type=int, default=1)

    ana = sub.add_parser("analyze", help="network and impact analytics")
    ana.add_argument("--config", type=Path)
    ana.add_argument("--out", type=Path, required=True)
    ana.add_argument("--panel", type=Path)
    ana.add_argument("--estimate", type=Path)
    ana.add_argument("--density-level", type=float)
    ana.add_argument("--edge-threshold", type=float)
    ana.add_argument("--snapshot-before", type=str)
    ana.add_argument("--snapshot-after", type=str)
    return parser


def _load_cfg(args) -> dict:
    if getattr(args, "config", None) is not None:
        return load_config(args.config)
    return {}


def _override(base, **updates):
    provided = {k: v for k, v in updates.items() if v is not None}
    return dataclasses.replace(base, **provided) if provided else base


def _path_setting(args, cfg: dict, flag: str, key: str) -> Path:
    val = getattr(args, flag, None)
    if val is not None:
        return val
    paths = cfg.get("paths", {})
    if key in paths:
        return Path(paths[key])
    raise UsageError(f"--{flag} (or [paths] {key}) is required")


def _ensure_out(args) -> Path:
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_table(rows: list[dict], columns: list[str], path: Path) -> None:
    # explicit columns keep the header present even when no rows qualify
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False,
                                               lineterminator="\n")


def cmd_simulate(args) -> None:
    cfg = _load_cfg(args)
    sim_cfg = cfg.get("simulate", {})
    base = SyntheticSpec()
    unknown = [k for k in sim_cfg if not hasattr(base, k)]
    if unknown:
        raise UsageError(f"unknown [simulate] keys: {unknown}")
    spec = SyntheticSpec(**{k: type(getattr(base, k))(v)
                            for k, v in sim_cfg.items()})
    spec = _override(spec, mode=args.mode, n_nodes=args.n_nodes,
                     n_periods=args.n_periods, n_factors=args.n_factors,
                     sparsity=args.sparsity, seed=args.seed)
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _ensure_out(args)
    meta = {"mode": spec.mode, "spec": config_dict(spec)}
    files: list[str] = []
    if spec.mode == "panel":
        panel, factors, truth = synthetic_panel(spec)
        artifacts.write_factors(factors, out / "factors.csv")
        files.append("factors.csv")
        pvals = {lk: invert_transform(panel.layers[lk], "probit")
                 for lk in LAYERS}
        idx = np.arange(panel.n_nodes)
        for lk in LAYERS:
            pvals[lk][:, idx, idx] = np.nan
        files += artifacts.write_panel(out, panel, pvals)
        files += _write_truth(out, truth, factors.names)
        meta.update(artifacts.panel_meta(panel))
        meta["transform"] = "probit"
    else:
        prices, factors = synthetic_prices(spec)
        artifacts.write_prices(prices, out / "prices.csv")
        factors.to_csv(out / "factors.csv", index=False, lineterminator="\n")
        files += ["prices.csv", "factors.csv"]
    artifacts.write_manifest(out, "simulate", meta, files)


def _write_truth(out: Path, truth, factor_names: list[str]) -> list[str]:
    rows = []
    for lk in LAYERS:
        b = truth.b[lk]
        r, n, _ = b.shape
        for k in range(r):
            for i in range(n):
                for j in range(n):
                    if i != j:
                        rows.append({"layer": LAYER_NAMES[lk],
                                     "factor": factor_names[k],
                                     "i": i, "j": j, "value": b[k, i, j]})
    pd.DataFrame(rows).to_csv(out / "truth_b.csv", index=False,
                              lineterminator="\n")
    rows = []
    for lk in LAYERS:
        for j, v in enumerate(truth.sigma2[lk]):
            rows.append({"layer": LAYER_NAMES[lk], "j": j, "value": v})
    pd.DataFrame(rows).to_csv(out / "truth_sigma2.csv", index=False,
                              lineterminator="\n")
    return ["truth_b.csv", "truth_sigma2.csv"]


def cmd_extract(args) -> None:
    cfg = _load_cfg(args)
    gcfg = cfg.get("granger", GrangerConfig())
    gcfg = _override(gcfg, window=args.window, step=args.step, lag=args.lag,
                     transform=args.transform, clip_eps=args.clip_eps)
    try:
        gcfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    prices_path = _path_setting(args, cfg, "prices", "prices")
    panel_prices = artifacts.load_prices(prices_path)
    signals = extract_signals(panel_prices)
    try:
        result = build_multilayer_panel(signals, gcfg)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    out = _ensure_out(args)

    sig_rows = pd.DataFrame({
        "date": np.repeat(signals.dates, signals.n_firms),
        "firm": np.tile(signals.labels, signals.n_weeks),
        "return": signals.returns.T.reshape(-1),
        "variance": signals.variance.T.reshape(-1),
        "floored": signals.floored.T.reshape(-1),
    })
    sig_rows.to_csv(out / "signals.csv", index=False, lineterminator="\n")
    files = ["signals.csv"]
    files += artifacts.write_panel(out, result.panel, result.pvals)
    meta = artifacts.panel_meta(result.panel)
    meta["granger"] = config_dict(gcfg)
    meta["transform"] = gcfg.transform
    artifacts.write_manifest(out, "extract", meta, files)


def _aligned_factors(factors: FactorSeries, dates: list[str]
                     ) -> tuple[FactorSeries, dict]:
    index = {d: k for k, d in enumerate(factors.dates)}
    missing = [d for d in dates if d not in index]
    if missing:
        raise DataError(
            f"factors lack {len(missing)} panel dates "
            f"(first missing: {missing[0]})")
    rows = np.array([index[d] for d in dates])
    values = factors.values[rows]
    mean = values.mean(axis=0)
    sd = values.std(axis=0)
    if np.any(sd == 0.0):
        flat = [factors.names[k] for k in np.flatnonzero(sd == 0.0)]
        raise DataError(f"factors constant over the sample: {flat}")
    standardized = (values - mean) / sd
    info = {"mean": mean.tolist(), "sd": sd.tolist(), "names": factors.names}
    return FactorSeries(values=standardized, names=factors.names,
                        dates=list(dates)), info


def cmd_estimate(args) -> None:
    cfg = _load_cfg(args)
    prior = cfg.get("prior", PriorConfig())
    scfg = cfg.get("sampler", SamplerConfig())
    acfg = cfg.get("analysis", AnalysisConfig())
    scfg = _override(scfg, n_iter=args.iters, n_burn=args.burn,
                     thin=args.thin, seed=args.seed)
    acfg = _override(acfg, hpdi_level=args.hpdi)
    try:
        prior.validate()
        scfg.validate()
        acfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    panel_dir = _path_setting(args, cfg, "panel", "panel")
    panel, _, panel_manifest = artifacts.load_panel_dir(panel_dir)
    factors_path = _path_setting(args, cfg, "factors", "factors")
    factors, std_info = _aligned_factors(artifacts.load_factors(factors_path),
                                         panel.dates)
    draws = run_chain(panel, factors, prior, scfg, threads=max(args.threads, 1))
    for lk in LAYERS:
        if not np.all(np.isfinite(draws.layers[lk].b)):
            raise NumericalError(f"non-finite coefficient draws in layer "
                                 f"{LAYER_NAMES[lk]}")

    out = _ensure_out(args)
    files = artifacts.write_draws(out, draws)
    summary = summarize_edges({lk: draws.layers[lk].b for lk in LAYERS},
                              acfg.hpdi_level, factors.names,
                              panel.node_labels, panel.sectors)
    files.append(artifacts.write_summary(out, summary, factors.names))

    diags = {
        "accept_rate": {LAYER_NAMES[lk]:
                        draws.layers[lk].accept_rate.tolist()
                        for lk in LAYERS},
        "factor_standardization": std_info,
        "hpdi_level": acfg.hpdi_level,
        "n_saved": draws.n_saved,
        "prior": config_dict(prior),
        "sampler": config_dict(scfg),
        "upstream_panel": panel_manifest.get("files", {}),
    }
    (out / "diagnostics.json").write_text(
        json.dumps(diags, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    files.append("diagnostics.json")
    meta = {"n_nodes": panel.n_nodes, "n_slices": panel.n_periods,
            "factors": factors.names, "labels": panel.node_labels,
            "sectors": panel.sectors, "dates": panel.dates}
    artifacts.write_manifest(out, "estimate", meta, files)


def _summary_matrices(df: pd.DataFrame, layer: str, factor: str, n: int
                      ) -> tuple[np.ndarray, np.ndarray]:
    sel = df[(df["layer"] == layer) & (df["factor"] == factor)]
    mean = np.zeros((n, n))
    sig = np.zeros((n, n), dtype=bool)
    ii = sel["i"].to_numpy(dtype=int)
    jj = sel["j"].to_numpy(dtype=int)
    mean[ii, jj] = sel["mean"].to_numpy(dtype=float)
    sig[ii, jj] = sel["significant"].to_numpy(dtype=bool)
    return mean, sig


def cmd_analyze(args) -> None:
    cfg = _load_cfg(args)
    acfg = cfg.get("analysis", AnalysisConfig())
    acfg = _override(acfg, density_level=args.density_level,
                     edge_threshold=args.edge_threshold,
                     snapshot_before=args.snapshot_before,
                     snapshot_after=args.snapshot_after)
    acfg.validate()

    panel_dir = _path_setting(args, cfg, "panel", "panel")
    panel, pvals, _ = artifacts.load_panel_dir(panel_dir)
    if pvals is None:
        raise DataError(f"{panel_dir} carries no p-value files")
    est_dir = _path_setting(args, cfg, "estimate", "estimate")
    est_manifest = artifacts.read_manifest(est_dir)
    summary_df = artifacts.load_summary(est_dir, est_manifest)

    n = panel.n_nodes
    dates = panel.dates
    before = acfg.snapshot_before or dates[0]
    after = acfg.snapshot_after or dates[-1]
    for snap in (before, after):
        if snap not in dates:
            raise DataError(f"snapshot date {snap} not among panel slices "
                            f"({dates[0]}..{dates[-1]})")
    t_before, t_after = dates.index(before), dates.index(after)

    out = _ensure_out(args)
    files = []

    rows = []
    for lk in LAYERS:
        for t, d in enumerate(dates):
            rows.append({"layer": LAYER_NAMES[lk], "date": d,
                         "level": acfg.density_level,
                         "density": density(pvals[lk][t], acfg.density_level)})
    _write_table(rows, ["layer", "date", "level", "density"],
                 out / "densities.csv")
    files.append("densities.csv")

    cent_rows, edge_rows, mover_rows = [], [], []
    for lk in LAYERS:
        layer = LAYER_NAMES[lk]
        btw = {}
        for tag, t in (("before", t_before), ("after", t_after)):
            adj = adjacency_from_pvals(pvals[lk][t], acfg.edge_threshold)
            deg = degree(adj)
            btw[tag] = betweenness(adj)
            for node in range(n):
                cent_rows.append({
                    "layer": layer, "snapshot": tag, "date": dates[t],
                    "node": node, "label": panel.node_labels[node],
                    "sector": panel.sectors[node] if panel.sectors else "NA",
                    "in_degree": int(deg["in"][node]),
                    "out_degree": int(deg["out"][node]),
                    "total_degree": int(deg["total"][node]),
                    "betweenness": btw[tag][node],
                })
            src, dst = np.nonzero(adj.T)
            for u, v in zip(src, dst):
                edge_rows.append({
                    "layer": layer, "snapshot": tag, "date": dates[t],
                    "source": int(u), "target": int(v),
                    "source_label": panel.node_labels[u],
                    "target_label": panel.node_labels[v],
                    "source_sector": panel.sectors[u] if panel.sectors else "NA",
                })
        movers = tercile_movers(btw["before"], btw["after"])
        for node in range(n):
            mover_rows.append({
                "layer": layer, "node": node,
                "label": panel.node_labels[node],
                "betweenness_before": btw["before"][node],
                "betweenness_after": btw["after"][node],
                "mover": bool(movers[node]),
            })
    _write_table(cent_rows,
                 ["layer", "snapshot", "date", "node", "label", "sector",
                  "in_degree", "out_degree", "total_degree", "betweenness"],
                 out / "centrality.csv")
    _write_table(edge_rows,
                 ["layer", "snapshot", "date", "source", "target",
                  "source_label", "target_label", "source_sector"],
                 out / "edges.csv")
    _write_table(mover_rows,
                 ["layer", "node", "label", "betweenness_before",
                  "betweenness_after", "mover"],
                 out / "tercile_movers.csv")
    files += ["centrality.csv", "edges.csv", "tercile_movers.csv"]

    factor_names = sorted(summary_df["factor"].unique())
    sectors = panel.sectors or ["NA"] * n
    sector_rows, impact_rows = [], []
    for lk in LAYERS:
        layer = LAYER_NAMES[lk]
        for factor in factor_names:
            mean, sig = _summary_matrices(summary_df, layer, factor, n)
            names, net = sector_net_effects(mean, sig, sectors)
            for a, ta in enumerate(names):
                for bb, sb in enumerate(names):
                    sector_rows.append({"layer": layer, "factor": factor,
                                        "target_sector": ta,
                                        "source_sector": sb,
                                        "net": int(net[a, bb])})
            agg = impact_aggregates(mean, sig)
            for node in range(n):
                impact_rows.append({
                    "layer": layer, "factor": factor, "node": node,
                    "label": panel.node_labels[node],
                    "sector": sectors[node],
                    **{k: agg[k][node] for k in ("in_pos", "in_neg", "out_pos",
                                                 "out_neg", "btw_pos",
                                                 "btw_neg")},
                })
    _write_table(sector_rows,
                 ["layer", "factor", "target_sector", "source_sector", "net"],
                 out / "sector_effects.csv")
    _write_table(impact_rows,
                 ["layer", "factor", "node", "label", "sector", "in_pos",
                  "in_neg", "out_pos", "out_neg", "btw_pos", "btw_neg"],
                 out / "impacts.csv")
    files += ["sector_effects.csv", "impacts.csv"]

    meta = {"analysis": config_dict(acfg), "snapshot_before": before,
            "snapshot_after": after, "factors": factor_names,
            "n_nodes": n, "dates": dates}
    artifacts.write_manifest(out, "analyze", meta, files)


_COMMANDS = {
    "simulate": cmd_simulate,
    "extract": cmd_extract,
    "estimate": cmd_estimate,
    "analyze": cmd_analyze,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
