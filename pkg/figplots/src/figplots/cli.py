"""Command line entry point.

    plot_figs --figure {1|2|3} --input-dir <dir> --out <png>

The input directory holds one diagnostics CSV per labeled run, either as
<label>.csv or as <label>/diagnostics.csv (the solver's per-run output
layout).
"""

import argparse
import os
import sys

from .render import FigureSpec, SchemaError, render

FIGURE_LABELS = {
    1: ("none", "local", "global", "combined", "fullgrid"),
    2: ("none", "local", "global", "combined", "fullgrid"),
    3: ("combined_w1", "combined_w1e-2", "combined_w1e-4", "combined_w0", "fullgrid"),
}


def locate_csv(input_dir: str, label: str) -> str:
    flat = os.path.join(input_dir, f"{label}.csv")
    nested = os.path.join(input_dir, label, "diagnostics.csv")
    if os.path.exists(flat):
        return flat
    if os.path.exists(nested):
        return nested
    raise FileNotFoundError(
        f"no diagnostics CSV for '{label}' (looked for {flat} and {nested})"
    )


def build_spec(figure: int, input_dir: str, out_path: str) -> FigureSpec:
    labels = FIGURE_LABELS[figure]
    inputs = tuple((locate_csv(input_dir, label), label) for label in labels)
    return FigureSpec(inputs=inputs, out_path=out_path, title=f"figure {figure}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_figs",
        description="Render the two-stream benchmark figures from diagnostics CSVs.",
    )
    parser.add_argument("--figure", type=int, choices=sorted(FIGURE_LABELS), required=True)
    parser.add_argument("--input-dir", required=True)
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        spec = build_spec(args.figure, args.input_dir, args.out)
        render(spec)
    except (FileNotFoundError, SchemaError) as exc:
        print(f"plot_figs: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
