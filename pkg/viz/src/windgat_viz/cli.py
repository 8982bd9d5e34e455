"""Command-line rendering of exported forecasting artifacts."""

from __future__ import annotations

import argparse
import sys
from datetime import datetime

from .plots import plot_attention, plot_city_bars, plot_predictions
from .schema import SchemaError, load_attention_report, load_eval_report, load_predictions


def cmd_attention(args) -> int:
    report = load_attention_report(args.report)
    matrix = plot_attention(report, args.city, args.out)
    print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} attention heatmap to {args.out}")
    return 0


def cmd_bars(args) -> int:
    reports = [load_eval_report(path) for path in args.reports]
    heights = plot_city_bars(reports, args.out, average=args.average)
    print(f"wrote {heights.shape[1]}-city MAE bars ({heights.shape[0]} series) to {args.out}")
    return 0


def cmd_predictions(args) -> int:
    rows = load_predictions(args.csv)
    try:
        start = datetime.fromisoformat(args.start)
        end = datetime.fromisoformat(args.end)
    except ValueError as exc:
        raise SchemaError(f"bad span timestamp: {exc}") from exc
    selected = plot_predictions(rows, args.city, (start, end), args.out)
    print(f"wrote prediction curves ({len(selected)} points) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windgat-viz", description="Plot exported forecasting artifacts"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    attention = sub.add_parser("attention", help="variables x cities attention heatmap")
    attention.add_argument("--report", required=True, help="exported attention JSON")
    attention.add_argument("--city", required=True, help="target city")
    attention.add_argument("--out", required=True, help="image file to write")
    attention.set_defaults(handler=cmd_attention)

    bars = sub.add_parser("bars", help="per-city MAE bars from eval reports")
    bars.add_argument("--reports", required=True, nargs="+", help="eval report JSON files")
    bars.add_argument("--average", action="store_true", help="average across reports")
    bars.add_argument("--out", required=True)
    bars.set_defaults(handler=cmd_bars)

    predictions = sub.add_parser("predictions", help="actual vs predicted curves")
    predictions.add_argument("--csv", required=True, help="predictions.csv dump")
    predictions.add_argument("--city", required=True)
    predictions.add_argument("--start", required=True, help="ISO timestamp, inclusive")
    predictions.add_argument("--end", required=True, help="ISO timestamp, inclusive")
    predictions.add_argument("--out", required=True)
    predictions.set_defaults(handler=cmd_predictions)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SchemaError as exc:
        print(f"windgat-viz: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
