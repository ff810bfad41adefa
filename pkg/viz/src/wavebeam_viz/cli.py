"""wavebeam-viz: render figures from persisted simulation artifacts.

Usage:
    wavebeam-viz KIND OUTPUT INPUT [INPUT ...]

KIND is one of TensionTimeSeries, MarkerDisplacement, RegimeMap,
LocomotionPath. Exit codes: 0 success, 2 bad request or schema mismatch.
"""
import argparse
import sys

from .render import KINDS, FigureRequest, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavebeam-viz",
        description="Render figures from wavebeam CSV/JSON artifacts.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("output", help="image file to write (.png or .svg)")
    parser.add_argument("inputs", nargs="+",
                        help="trace CSV / report JSON / summary CSV")
    args = parser.parse_args(argv)
    try:
        path = render(FigureRequest(kind=args.kind,
                                    inputs=tuple(args.inputs),
                                    output=args.output))
    except SchemaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
