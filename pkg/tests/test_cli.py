"""End-to-end command line pipeline via subprocesses."""

import json
import subprocess
import sys

import pandas as pd
import pytest

from matnet import load_panel_dir


def run_cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "matnet", *map(str, args)],
                          capture_output=True, text=True, **kw)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """simulate(prices) -> extract -> estimate -> analyze, all exit 0."""
    root = tmp_path_factory.mktemp("pipe")
    sim, ext, est, ana = (root / s for s in ("sim", "ext", "est", "ana"))
    steps = [
        ("simulate", "--mode", "prices", "--n-nodes", 4, "--n-periods", 40,
         "--n-factors", 2, "--seed", 7, "--out", sim),
        ("extract", "--prices", sim / "prices.csv", "--window", 26, "--step",
         2, "--lag", 1, "--out", ext),
        ("estimate", "--panel", ext, "--factors", sim / "factors.csv",
         "--iters", 30, "--burn", 10, "--thin", 2, "--seed", 3, "--out", est),
        ("analyze", "--panel", ext, "--estimate", est, "--out", ana),
    ]
    for step in steps:
        proc = run_cli(*step)
        assert proc.returncode == 0, f"{step[0]} failed: {proc.stderr}"
    return {"sim": sim, "ext": ext, "est": est, "ana": ana, "root": root}


def test_pipeline_outputs_exist(pipeline):
    assert (pipeline["sim"] / "prices.csv").exists()
    assert (pipeline["sim"] / "factors.csv").exists()
    for stem in ("return", "risk_premium", "leverage", "volatility"):
        assert (pipeline["ext"] / f"panel_{stem}.csv").exists()
        assert (pipeline["ext"] / f"pvals_{stem}.csv").exists()
    for name in ("draws_b.csv", "draws_sigma2.csv", "draws_mixture.csv",
                 "summary.csv", "diagnostics.json"):
        assert (pipeline["est"] / name).exists()
    for name in ("densities.csv", "centrality.csv", "edges.csv",
                 "tercile_movers.csv", "sector_effects.csv", "impacts.csv"):
        assert (pipeline["ana"] / name).exists()


def test_every_stage_writes_verifiable_manifest(pipeline):
    # hash-checked loads succeed on the extract stage
    panel, pvals, manifest = load_panel_dir(pipeline["ext"])
    assert manifest["stage"] == "extract"
    assert pvals is not None
    assert panel.n_nodes == 4
    for key in ("sim", "est", "ana"):
        assert (pipeline[key] / "manifest.json").exists()


def test_extract_slice_geometry(pipeline):
    panel, _, _ = load_panel_dir(pipeline["ext"])
    # 40 price weeks -> 39 signal weeks; window 26 step 2 -> 7 slices
    assert panel.n_periods == 7
    assert len(panel.dates) == 7


def test_diagnostics_content(pipeline):
    diag = json.loads((pipeline["est"] / "diagnostics.json").read_text())
    assert diag["sampler"]["n_iter"] == 30
    assert diag["n_saved"] == 10
    assert set(diag["accept_rate"]) == {"return", "risk_premium", "leverage",
                                        "volatility"}
    factor_cols = pd.read_csv(pipeline["sim"] / "factors.csv",
                              nrows=0).columns
    assert diag["factor_standardization"]["names"] == \
        [c for c in factor_cols if c != "date"]


def test_analyze_tables_well_formed(pipeline):
    dens = pd.read_csv(pipeline["ana"] / "densities.csv")
    assert set(dens["layer"]) == {"return", "risk_premium", "leverage",
                                  "volatility"}
    assert ((dens["density"] >= 0) & (dens["density"] <= 1)).all()
    cent = pd.read_csv(pipeline["ana"] / "centrality.csv")
    assert set(cent["snapshot"]) == {"before", "after"}
    assert (cent["total_degree"] ==
            cent["in_degree"] + cent["out_degree"]).all()
    # edges.csv keeps its header even with zero qualifying edges
    edges = pd.read_csv(pipeline["ana"] / "edges.csv")
    assert {"source", "target", "layer", "snapshot"} <= set(edges.columns)


def test_analyze_reruns_byte_identical(pipeline):
    rerun = pipeline["root"] / "ana2"
    proc = run_cli("analyze", "--panel", pipeline["ext"], "--estimate",
                   pipeline["est"], "--out", rerun)
    assert proc.returncode == 0, proc.stderr
    for name in ("densities.csv", "centrality.csv", "edges.csv",
                 "tercile_movers.csv", "sector_effects.csv", "impacts.csv",
                 "manifest.json"):
        assert (rerun / name).read_bytes() == \
            (pipeline["ana"] / name).read_bytes()


def test_unknown_flag_exits_one(tmp_path):
    proc = run_cli("simulate", "--bogus", 1, "--out", tmp_path / "x")
    assert proc.returncode == 1
    assert proc.stderr.strip()


def test_missing_subcommand_exits_one():
    proc = run_cli()
    assert proc.returncode == 1


def test_bad_config_value_exits_one(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sampler]\nn_iter = soon\n")
    proc = run_cli("estimate", "--config", cfg, "--panel", tmp_path,
                   "--factors", tmp_path / "f.csv", "--out", tmp_path / "o")
    assert proc.returncode == 1
    assert "n_iter" in proc.stderr


def test_estimate_without_manifest_exits_two(tmp_path, pipeline):
    proc = run_cli("estimate", "--panel", tmp_path, "--factors",
                   pipeline["sim"] / "factors.csv", "--iters", 4, "--burn", 1,
                   "--thin", 1, "--out", tmp_path / "o")
    assert proc.returncode == 2
    assert "manifest" in proc.stderr


def test_corrupted_input_exits_two(tmp_path, pipeline):
    import shutil
    bad = tmp_path / "ext"
    shutil.copytree(pipeline["ext"], bad)
    target = bad / "panel_return.csv"
    target.write_text(target.read_text().replace("0", "9", 1))
    proc = run_cli("estimate", "--panel", bad, "--factors",
                   pipeline["sim"] / "factors.csv", "--iters", 4, "--burn", 1,
                   "--thin", 1, "--out", tmp_path / "o")
    assert proc.returncode == 2
    assert "hash mismatch" in proc.stderr


def test_unknown_snapshot_date_exits_two(tmp_path, pipeline):
    proc = run_cli("analyze", "--panel", pipeline["ext"], "--estimate",
                   pipeline["est"], "--snapshot-before", "1999-01-01",
                   "--out", tmp_path / "o")
    assert proc.returncode == 2
    assert "1999-01-01" in proc.stderr


def test_flag_overrides_config(tmp_path, pipeline):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[sampler]\nn_iter = 20\nn_burn = 5\nthin = 1\nseed = 3\n")
    out = tmp_path / "est"
    proc = run_cli("estimate", "--config", cfg, "--panel", pipeline["ext"],
                   "--factors", pipeline["sim"] / "factors.csv", "--iters", 8,
                   "--out", out)
    assert proc.returncode == 0, proc.stderr
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["sampler"]["n_iter"] == 8       # flag wins
    assert diag["sampler"]["n_burn"] == 5       # config fills the rest
    assert diag["n_saved"] == 3


def test_zero_saved_draws_rejected_cleanly(tmp_path, pipeline):
    # burn plus thin leave nothing to save -> usage error, not a crash
    proc = run_cli("estimate", "--panel", pipeline["ext"], "--factors",
                   pipeline["sim"] / "factors.csv", "--iters", 8, "--burn", 5,
                   "--thin", 5, "--out", tmp_path / "o")
    assert proc.returncode == 1
    assert "saved" in proc.stderr


def test_config_paths_supply_inputs(tmp_path, pipeline):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[paths]\npanel = {pipeline['ext']}\n"
                   f"estimate = {pipeline['est']}\n")
    out = tmp_path / "ana"
    proc = run_cli("analyze", "--config", cfg, "--out", out)
    assert proc.returncode == 0, proc.stderr
    assert (out / "densities.csv").exists()


def test_extract_handles_firm_with_missing_weeks(tmp_path):
    rows = []
    base = pd.Timestamp("2024-01-05")  # a Friday
    for w in range(14):
        date = (base + pd.Timedelta(weeks=w)).date().isoformat()
        px = 100 + w
        rows.append({"firm_id": "AAA", "date": date, "open": px,
                     "high": px * 1.02, "low": px * 0.99, "close": px * 1.01,
                     "total_return_close": px * 1.01, "sector": "fin"})
        if w != 6:  # BBB skips one week entirely
            rows.append({"firm_id": "BBB", "date": date, "open": 50 + w,
                         "high": (50 + w) * 1.03, "low": (50 + w) * 0.98,
                         "close": (50 + w) * 1.0005,
                         "total_return_close": (50 + w) * 1.0005,
                         "sector": "tech"})
    prices = tmp_path / "prices.csv"
    pd.DataFrame(rows).to_csv(prices, index=False)
    out = tmp_path / "ext"
    proc = run_cli("extract", "--prices", prices, "--window", 8, "--lag", 1,
                   "--out", out)
    assert proc.returncode == 0, proc.stderr
    panel, pvals, _ = load_panel_dir(out)
    assert panel.n_nodes == 2
    # 14 price weeks -> 13 signal weeks -> 6 slices at window 8, step 1
    assert panel.n_periods == 6
