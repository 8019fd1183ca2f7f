"""Command-line entry point: plots <figure_kind> <input.csv> <output.png|svg>."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render a comparison figure from a cliquedyn CSV output.",
    )
    parser.add_argument("figure_kind", choices=FIGURE_KINDS)
    parser.add_argument("input_csv")
    parser.add_argument("output_path", help="target image, .png or .svg")
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec(args.input_csv, args.figure_kind, args.output_path))
    except SchemaError as exc:
        print(f"schema-error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
