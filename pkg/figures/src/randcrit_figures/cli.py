"""`render` command: one figure per invocation, pure file-in/file-out."""

from __future__ import annotations

import argparse
import sys

from .render import FigureKind, FigureSpec, RenderError, render
from .schema import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a figure from randcrit CLI artifacts.")
    parser.add_argument("--kind", required=True,
                        choices=[k.value for k in FigureKind])
    parser.add_argument("--in", dest="input", required=True,
                        help="input CSV or JSON artifact")
    parser.add_argument("--overlay", default=None,
                        help="companion JSON with an analytic curve")
    parser.add_argument("--out", required=True, help="output image (.png/.svg)")
    args = parser.parse_args(argv)

    spec = FigureSpec(kind=FigureKind(args.kind), input_path=args.input,
                      output_path=args.out, overlay_path=args.overlay)
    try:
        render(spec)
    except (SchemaError, RenderError, OSError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
