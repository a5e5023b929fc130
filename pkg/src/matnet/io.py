"""Artifact serialization, manifests, and config-file parsing.

Every stage writes its outputs into one directory together with a
manifest.json recording dimensions, labels, the effective config, and a
sha256 per file. Stages that consume a directory verify the hashes of the
files they read, so silent upstream edits fail loudly. All CSV is UTF-8
comma-separated with a header row; missing values are empty fields. Reruns
with identical inputs produce byte-identical files (manifests carry no
timestamps).
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import pandas as pd

from .granger import GrangerConfig, PricePanel
from .gibbs import PosteriorDraws, SamplerConfig
from .matnorm import (LAYER_BY_NAME, LAYER_NAMES, LAYERS, FactorSeries,
                      MultilayerPanel)
from .priors import PriorConfig


class UsageError(Exception):
    """Bad invocation: unknown options, missing required settings."""


class DataError(Exception):
    """Malformed or inconsistent input data."""


class NumericalError(Exception):
    """A computation produced non-finite or impossible values."""


@dataclass(frozen=True)
class AnalysisConfig:
    hpdi_level: float = 0.95
    density_level: float = 0.01
    edge_threshold: float = 0.001
    snapshot_before: str = ""
    snapshot_after: str = ""

    def validate(self) -> None:
        if not (0.0 < self.hpdi_level < 1.0):
            raise UsageError("hpdi_level must lie in (0, 1)")
        for name in ("density_level", "edge_threshold"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise UsageError(f"{name} must lie in (0, 1]")


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(out_dir: Path, stage: str, meta: dict,
                   file_names: list[str]) -> None:
    entry = {
        "stage": stage,
        "meta": meta,
        "files": {name: sha256_file(out_dir / name) for name in sorted(file_names)},
    }
    text = json.dumps(entry, indent=2, sort_keys=True) + "\n"
    (out_dir / "manifest.json").write_text(text, encoding="utf-8")


def read_manifest(in_dir: Path) -> dict:
    path = in_dir / "manifest.json"
    if not path.exists():
        raise DataError(f"no manifest.json in {in_dir}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed manifest in {in_dir}: {exc}") from exc


def verified_path(in_dir: Path, name: str, manifest: dict | None) -> Path:
    """Path of an input file, hash-checked against its manifest entry."""
    path = in_dir / name
    if not path.exists():
        raise DataError(f"missing input file {path}")
    if manifest is not None:
        recorded = manifest.get("files", {}).get(name)
        if recorded is None:
            raise DataError(f"{name} not listed in manifest of {in_dir}")
        actual = sha256_file(path)
        if actual != recorded:
            raise DataError(
                f"hash mismatch for {path}: manifest {recorded[:12]}.., "
                f"file {actual[:12]}..")
    return path


def _read_csv(path: Path, **kwargs) -> pd.DataFrame:
    try:
        return pd.read_csv(path, **kwargs)
    except FileNotFoundError as exc:
        raise DataError(f"missing input file {path}") from exc
    except (pd.errors.ParserError, UnicodeDecodeError, ValueError) as exc:
        raise DataError(f"malformed CSV {path}: {exc}") from exc


def _write_csv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, index=False, lineterminator="\n")


# ---------------------------------------------------------------------------
# Prices and factors.
# ---------------------------------------------------------------------------

PRICE_COLUMNS = ("firm_id", "date", "open", "high", "low", "close",
                 "total_return_close")


def write_prices(df: pd.DataFrame, path: Path) -> None:
    _write_csv(df, path)


def load_prices(path: Path) -> PricePanel:
    """Load an OHLC panel, bucketing rows into Friday-anchored weeks.

    Accepts one row per firm-week or per firm-day; days aggregate into the
    week ending on the next Friday (open = first, close/total = last,
    high = max, low = min). Firms missing a week get NaN for that week.
    """
    df = _read_csv(path)
    missing = [c for c in PRICE_COLUMNS if c not in df.columns]
    if missing:
        raise DataError(f"{path} lacks required columns {missing}")
    if df.empty:
        raise DataError(f"{path} contains no rows")
    df = df.copy()
    try:
        stamp = pd.to_datetime(df["date"], format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise DataError(f"unparseable dates in {path}: {exc}") from exc
    df["week"] = (stamp + pd.to_timedelta((4 - stamp.dt.weekday) % 7,
                                          unit="D")).dt.date.astype(str)
    df["stamp"] = stamp
    price_cols = ["open", "high", "low", "close", "total_return_close"]
    for col in price_cols:
        vals = pd.to_numeric(df[col], errors="coerce")
        if vals.isna().sum() > pd.isna(df[col]).sum():
            raise DataError(f"non-numeric {col} values in {path}")
        if (vals <= 0).any():
            raise DataError(f"non-positive {col} values in {path}")
        df[col] = vals
    if "sector" not in df.columns:
        df["sector"] = "NA"

    df = df.sort_values(["firm_id", "stamp"], kind="stable")
    grouped = df.groupby(["firm_id", "week"], sort=True)
    weekly = grouped.agg(open=("open", "first"), high=("high", "max"),
                         low=("low", "min"), close=("close", "last"),
                         total_return_close=("total_return_close", "last"),
                         sector=("sector", "first")).reset_index()

    firms = sorted(weekly["firm_id"].unique())
    weeks = sorted(weekly["week"].unique())
    f_idx = {f: k for k, f in enumerate(firms)}
    w_idx = {w: k for k, w in enumerate(weeks)}
    arrays = {c: np.full((len(firms), len(weeks)), np.nan) for c in price_cols}
    sectors = ["NA"] * len(firms)
    for row in weekly.itertuples(index=False):
        i, j = f_idx[row.firm_id], w_idx[row.week]
        arrays["open"][i, j] = row.open
        arrays["high"][i, j] = row.high
        arrays["low"][i, j] = row.low
        arrays["close"][i, j] = row.close
        arrays["total_return_close"][i, j] = row.total_return_close
        sectors[i] = str(row.sector)
    panel = PricePanel(log_open=np.log(arrays["open"]),
                       log_high=np.log(arrays["high"]),
                       log_low=np.log(arrays["low"]),
                       log_close=np.log(arrays["close"]),
                       log_total_return=np.log(arrays["total_return_close"]),
                       dates=weeks, labels=[str(f) for f in firms],
                       sectors=sectors)
    try:
        panel.validate()
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return panel


def write_factors(factors: FactorSeries, path: Path) -> None:
    df = pd.DataFrame({"date": factors.dates})
    for k, name in enumerate(factors.names):
        df[name] = factors.values[:, k]
    _write_csv(df, path)


def load_factors(path: Path) -> FactorSeries:
    df = _read_csv(path)
    if "date" not in df.columns or df.shape[1] < 2:
        raise DataError(f"{path} needs a date column and at least one factor")
    names = [c for c in df.columns if c != "date"]
    values = df[names].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError(f"non-finite factor values in {path}")
    fs = FactorSeries(values=values, names=names,
                      dates=[str(d) for d in df["date"]])
    try:
        fs.validate()
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return fs


# ---------------------------------------------------------------------------
# Panels (transformed responses and p-value stacks), long format.
# ---------------------------------------------------------------------------

def _layer_frame(stack: np.ndarray, dates: list[str]) -> pd.DataFrame:
    t, n, _ = stack.shape
    ii, jj = np.nonzero(~np.eye(n, dtype=bool))
    rows = {
        "date": np.repeat(dates, ii.size),
        "i": np.tile(ii, t),
        "j": np.tile(jj, t),
        "value": np.concatenate([stack[s][ii, jj] for s in range(t)]),
    }
    return pd.DataFrame(rows)


def _frame_to_stack(df: pd.DataFrame, dates: list[str], n: int,
                    path: Path) -> np.ndarray:
    stack = np.full((len(dates), n, n), np.nan)
    d_idx = {d: k for k, d in enumerate(dates)}
    try:
        t = np.array([d_idx[str(d)] for d in df["date"]])
    except KeyError as exc:
        raise DataError(f"{path} has a date outside the manifest: {exc}") from exc
    i = df["i"].to_numpy(dtype=int)
    j = df["j"].to_numpy(dtype=int)
    if np.any(i < 0) or np.any(i >= n) or np.any(j < 0) or np.any(j >= n):
        raise DataError(f"{path} has node indices outside 0..{n - 1}")
    stack[t, i, j] = df["value"].to_numpy(dtype=float)
    return stack


def write_panel(out_dir: Path, panel: MultilayerPanel,
                pvals: dict | None) -> list[str]:
    """Write per-layer response CSVs (and p-value CSVs when available).

    Flagged or masked cells serialize as empty values. Returns the file
    names written.
    """
    names = []
    for lk in LAYERS:
        layer = LAYER_NAMES[lk]
        vals = panel.layers[lk].copy()
        flags = panel.flags.get(lk)
        if flags is not None:
            vals[flags] = np.nan
        name = f"panel_{layer}.csv"
        _write_csv(_layer_frame(vals, panel.dates), out_dir / name)
        names.append(name)
        if pvals is not None:
            name = f"pvals_{layer}.csv"
            _write_csv(_layer_frame(pvals[lk], panel.dates), out_dir / name)
            names.append(name)
    return names


def panel_meta(panel: MultilayerPanel) -> dict:
    return {
        "n_nodes": panel.n_nodes,
        "n_slices": panel.n_periods,
        "dates": list(panel.dates),
        "labels": list(panel.node_labels),
        "sectors": list(panel.sectors),
    }


def load_panel_dir(in_dir: Path) -> tuple[MultilayerPanel, dict | None, dict]:
    """Load a panel directory: (panel, pvals or None, manifest)."""
    manifest = read_manifest(in_dir)
    meta = manifest.get("meta", {})
    for key in ("n_nodes", "dates", "labels"):
        if key not in meta:
            raise DataError(f"manifest in {in_dir} lacks meta.{key}")
    n = int(meta["n_nodes"])
    dates = [str(d) for d in meta["dates"]]
    layers, flags = {}, {}
    pvals: dict | None = {}
    for lk in LAYERS:
        layer = LAYER_NAMES[lk]
        path = verified_path(in_dir, f"panel_{layer}.csv", manifest)
        stack = _frame_to_stack(_read_csv(path), dates, n, path)
        flag = ~np.isfinite(stack)
        flag[:, np.arange(n), np.arange(n)] = False
        stack = np.where(np.isfinite(stack), stack, 0.0)
        layers[lk] = stack
        flags[lk] = flag
        pname = f"pvals_{layer}.csv"
        if (in_dir / pname).exists() and pvals is not None:
            ppath = verified_path(in_dir, pname, manifest)
            pvals[lk] = _frame_to_stack(_read_csv(ppath), dates, n, ppath)
        else:
            pvals = None
    panel = MultilayerPanel(layers=layers, dates=dates,
                            node_labels=[str(x) for x in meta["labels"]],
                            sectors=[str(x) for x in meta.get("sectors", [])],
                            flags=flags)
    try:
        panel.validate()
    except ValueError as exc:
        raise DataError(f"panel in {in_dir} is inconsistent: {exc}") from exc
    return panel, pvals, manifest


# ---------------------------------------------------------------------------
# Posterior draws and summaries.
# ---------------------------------------------------------------------------

def write_draws(out_dir: Path, draws: PosteriorDraws) -> list[str]:
    """One columnar CSV per parameter block; a row per (layer, saved sweep)."""
    n = draws.layers[LAYERS[0]].sigma2.shape[1]
    r = draws.layers[LAYERS[0]].b.shape[1]
    names = []

    def block_frame(extract, columns):
        frames = []
        for lk in LAYERS:
            ld = draws.layers[lk]
            flat = extract(ld)
            frame = pd.DataFrame(flat, columns=columns)
            frame.insert(0, "sweep", draws.saved_iterations)
            frame.insert(0, "layer", LAYER_NAMES[lk])
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    off = ~np.eye(n, dtype=bool)
    b_cols = [f"b_{k}_{i}_{j}" for k in range(r) for i in range(n)
              for j in range(n) if i != j]
    df = block_frame(lambda ld: ld.b[:, :, off].reshape(ld.b.shape[0], -1),
                     b_cols)
    _write_csv(df, out_dir / "draws_b.csv")
    names.append("draws_b.csv")

    s_cols = [f"sigma2_{j}" for j in range(n)]
    df = block_frame(lambda ld: ld.sigma2, s_cols)
    _write_csv(df, out_dir / "draws_sigma2.csv")
    names.append("draws_sigma2.csv")

    m_b = draws.prior.m_b
    m_s = draws.prior.m_sigma
    mix_cols = ([f"p_{m}" for m in range(m_b)] + [f"mu_{m}" for m in range(m_b)]
                + [f"gamma2_{m}" for m in range(m_b)]
                + [f"q_{m}" for m in range(m_s)]
                + [f"alpha_{m}" for m in range(m_s)]
                + [f"beta_{m}" for m in range(m_s)])
    df = block_frame(lambda ld: np.hstack([ld.p, ld.mu, ld.gamma2, ld.q,
                                           ld.alpha, ld.beta]), mix_cols)
    _write_csv(df, out_dir / "draws_mixture.csv")
    names.append("draws_mixture.csv")
    return names


def write_summary(out_dir: Path, summary, factor_names: list[str]) -> str:
    rows = []
    for lk in LAYERS:
        layer = LAYER_NAMES[lk]
        mean = summary.mean[lk]
        lower = summary.lower[lk]
        upper = summary.upper[lk]
        sig = summary.significant[lk]
        r, n, _ = mean.shape
        for k in range(r):
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    rows.append({
                        "layer": layer, "factor": factor_names[k],
                        "i": i, "j": j,
                        "i_label": summary.node_labels[i],
                        "j_label": summary.node_labels[j],
                        "mean": mean[k, i, j], "lower": lower[k, i, j],
                        "upper": upper[k, i, j],
                        "significant": bool(sig[k, i, j]),
                    })
    _write_csv(pd.DataFrame(rows), out_dir / "summary.csv")
    return "summary.csv"


def load_summary(in_dir: Path, manifest: dict | None = None) -> pd.DataFrame:
    path = verified_path(in_dir, "summary.csv", manifest)
    df = _read_csv(path)
    needed = {"layer", "factor", "i", "j", "mean", "lower", "upper",
              "significant"}
    if not needed.issubset(df.columns):
        raise DataError(f"{path} lacks columns {sorted(needed - set(df.columns))}")
    return df


# ---------------------------------------------------------------------------
# Config files (flat INI-style sections mirroring the config dataclasses).
# ---------------------------------------------------------------------------

_SECTION_TYPES = {
    "granger": GrangerConfig,
    "prior": PriorConfig,
    "sampler": SamplerConfig,
    "analysis": AnalysisConfig,
}


def _coerce(raw: str, target_type) -> object:
    if target_type is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return target_type(raw)


def load_config(path: Path) -> dict:
    """Parse an INI config into {section: dataclass or dict}.

    Sections granger/prior/sampler/analysis map onto their config types;
    unknown keys are errors. The paths and simulate sections stay dicts.
    """
    parser = configparser.ConfigParser()
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    out: dict[str, object] = {}
    for section in parser.sections():
        if section in _SECTION_TYPES:
            cls = _SECTION_TYPES[section]
            types = {f.name: type(getattr(cls(), f.name)) for f in fields(cls)}
            kwargs = {}
            for key, raw in parser.items(section):
                if key not in types:
                    raise UsageError(f"unknown key {key!r} in [{section}]")
                try:
                    kwargs[key] = _coerce(raw, types[key])
                except ValueError as exc:
                    raise UsageError(
                        f"bad value for {section}.{key}: {exc}") from exc
            out[section] = cls(**kwargs)
        elif section in ("paths", "simulate"):
            out[section] = dict(parser.items(section))
        else:
            raise UsageError(f"unknown config section [{section}]")
    return out


def config_dict(obj) -> dict:
    """Dataclass config as a JSON-ready dict."""
    return {k: v for k, v in asdict(obj).items()}
