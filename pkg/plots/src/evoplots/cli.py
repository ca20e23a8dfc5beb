"""Command line: batch-render charts from a chart-list file.

The --spec JSON file holds one chart description or a list of them:

    [
      {"x_axis": "generations", "metric": "best_so_far"},
      {"x_axis": "evaluations", "metric": "diversity"},
      {"kind": "calibration", "csv": "calibration.csv"}
    ]

Series entries may omit "kind" (it defaults to "series"). A calibration
entry's csv path is resolved against --in unless absolute. Without --spec,
all four series charts are rendered.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .charts import DEFAULT_SPECS, PlotSpec, render, render_calibration
from .reader import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render experiment CSVs into charts")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render charts from run-log CSVs")
    p.add_argument("--in", dest="csv_dir", required=True,
                   help="directory of run-log CSVs (or one CSV file)")
    p.add_argument("--spec", default=None,
                   help="JSON chart spec (default: all four series charts)")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _load_entries(spec_path) -> list[dict]:
    with open(spec_path) as fh:
        doc = json.load(fh)
    entries = doc if isinstance(doc, list) else [doc]
    if not all(isinstance(e, dict) for e in entries):
        raise ValueError("spec must be a JSON object or list of objects")
    return entries


def _render_entry(entry: dict, csv_dir: Path, out_dir: Path) -> Path:
    kind = entry.get("kind", "series")
    if kind == "series":
        spec = PlotSpec(entry["x_axis"], entry["metric"])
        return render(csv_dir, spec, out_dir / spec.stem)
    if kind == "calibration":
        csv = Path(entry.get("csv", "calibration.csv"))
        if not csv.is_absolute():
            base = csv_dir if csv_dir.is_dir() else csv_dir.parent
            csv = base / csv
        return render_calibration(csv, out_dir / "calibration")
    raise ValueError(f"unknown chart kind {kind!r}")


def _cmd_render(args) -> int:
    csv_dir = Path(args.csv_dir)
    out_dir = Path(args.out)
    try:
        if args.spec is None:
            entries = [{"x_axis": s.x_axis, "metric": s.metric}
                       for s in DEFAULT_SPECS]
        else:
            entries = _load_entries(args.spec)
        for entry in entries:
            png = _render_entry(entry, csv_dir, out_dir)
            print(f"wrote {png} and {png.with_suffix('.svg')}")
    except (SchemaError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _cmd_render(args)


if __name__ == "__main__":
    sys.exit(main())
