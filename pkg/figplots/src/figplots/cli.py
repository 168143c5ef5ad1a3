"""Command-line entries, one per plot kind."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError
from .series import SeriesPlotSpec, plot_series
from .wigner import WignerPlotSpec, plot_wigner


def main_series(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplot-series",
        description="Render time-series panels from a cavmotion series CSV")
    parser.add_argument("--input", required=True, help="series.csv path")
    parser.add_argument("--panel", action="append", default=[],
                        help="comma-separated column names; repeat per panel")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--dual-axis", action="store_true",
                        help="two-column panels get separate left/right axes")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    spec = SeriesPlotSpec(
        input_path=args.input,
        panels=[p.split(",") for p in args.panel],
        output_path=args.out,
        dual_axis=args.dual_axis,
        title=args.title)
    try:
        path = plot_series(spec)
    except SchemaError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    sys.stdout.write(path + "\n")
    return 0


def main_wigner(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figplot-wigner",
        description="Render phase-space heatmaps from exported Wigner grids")
    parser.add_argument("--inputs", nargs="+", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--ncols", type=int, default=2)
    parser.add_argument("--labels", nargs="*", default=None)
    args = parser.parse_args(argv)
    spec = WignerPlotSpec(input_paths=args.inputs, output_path=args.out,
                          n_cols=args.ncols, labels=args.labels)
    try:
        path = plot_wigner(spec)
    except SchemaError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    sys.stdout.write(path + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main_series())
