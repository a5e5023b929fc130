"""Command line figure renderer.

Usage: python -m matnet_figs <kind> --in <dir> --out <file.png> [options]

Kinds: density-timeseries, coefficient-heatmap, sector-block-heatmap,
centrality-scatter, network-snapshot. The input directory must hold the
pipeline's analysis/estimate CSV tables. Exit codes: 0 success, 1 usage
error, 2 missing or malformed input table.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import RENDERERS, SchemaError


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(
        prog="matnet_figs",
        description="Render one figure from pipeline CSV tables.")
    ap.add_argument("kind", choices=sorted(RENDERERS))
    ap.add_argument("--in", dest="in_dir", type=Path, required=True,
                    help="directory holding the CSV tables")
    ap.add_argument("--out", type=Path, required=True,
                    help="PNG file to write")
    ap.add_argument("--layer", default="return",
                    help="layer name (default: return)")
    ap.add_argument("--factor", default=None,
                    help="factor name for heatmaps (default: first)")
    ap.add_argument("--snapshot", default="after",
                    choices=("before", "after"),
                    help="snapshot for network views (default: after)")
    ap.add_argument("--seed", type=int, default=7,
                    help="layout seed for network snapshots")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0

    kwargs: dict = {}
    if args.kind in ("coefficient-heatmap", "sector-block-heatmap"):
        kwargs = {"layer": args.layer, "factor": args.factor}
    elif args.kind == "centrality-scatter":
        kwargs = {"layer": args.layer}
    elif args.kind == "network-snapshot":
        kwargs = {"layer": args.layer, "snapshot": args.snapshot,
                  "seed": args.seed}
    try:
        RENDERERS[args.kind](args.in_dir, args.out, **kwargs)
    except SchemaError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
