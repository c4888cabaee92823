"""Batch plotting entry point: ``plot <kind> -i input.csv -o figure.png``."""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, EmptyInputError, MissingColumnError, PlotJob, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render a figure from GEO-experiment CSV outputs.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("-i", "--input", required=True, help="input CSV path")
    parser.add_argument("-o", "--output", required=True, help="output image path")
    parser.add_argument("--bins", type=int, default=30, help="histogram bins (default 30)")
    parser.add_argument(
        "--range", nargs=2, type=float, default=None, metavar=("LO", "HI"),
        help="explicit histogram range (default: data extent)",
    )
    parser.add_argument(
        "--which", choices=("brand", "geo"), default="brand",
        help="correlation family for corr-trace (default brand)",
    )
    parser.add_argument(
        "--ref-slope", type=float, default=0.5,
        help="reference-line slope for scatter (default 0.5)",
    )
    parser.add_argument(
        "--level", type=float, default=0.95,
        help="quantile marked on width densities (default 0.95)",
    )
    parser.add_argument(
        "--scale", type=int, default=20, help="heatmap pixels per cell (default 20)"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    job = PlotJob(
        kind=args.kind,
        input_path=args.input,
        output_path=args.output,
        bins=args.bins,
        which=args.which,
        ref_slope=args.ref_slope,
        level=args.level,
        scale=args.scale,
        value_range=tuple(args.range) if args.range else None,
    )
    try:
        info = render(job)
    except (MissingColumnError, EmptyInputError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output}")
    for key, value in sorted(info.items(), key=lambda kv: str(kv[0])):
        print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
