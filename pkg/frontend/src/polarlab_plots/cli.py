"""plots <figure_kind> --csv <paths...> --out <file>"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render polarlab simulation CSVs as figures."
    )
    parser.add_argument("figure_kind", choices=FIGURE_KINDS)
    parser.add_argument("--csv", nargs="+", required=True, help="input CSV files")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--group-by",
        default="decoder,L,lambda",
        help="comma-separated series grouping columns (sweep figures)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        figure_kind=args.figure_kind,
        csv_paths=tuple(args.csv),
        out_path=args.out,
        group_keys=tuple(k for k in args.group_by.split(",") if k),
    )
    try:
        render(spec)
    except (RenderError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
