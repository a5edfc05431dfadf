"""Command line entry point: `render_figures --manifest <path> --figures 1..6`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_IDS, RenderError, render, specs_from_manifests


def parse_figure_range(text: str):
    """Accept '1..6', '1-6', '2', or comma lists like '1,3,6'."""
    ids = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        sep = ".." if ".." in chunk else ("-" if "-" in chunk else None)
        if sep:
            lo, hi = chunk.split(sep, 1)
            ids.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            ids.append(int(chunk))
    bad = [i for i in ids if i not in FIGURE_IDS]
    if bad or not ids:
        raise ValueError(f"figure ids must lie in 1..6, got {text!r}")
    return sorted(set(ids))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Regenerate figures from resv-sync run manifests",
    )
    parser.add_argument("--manifest", action="append", required=True,
                        help="run manifest JSON (repeatable)")
    parser.add_argument("--figures", default="1..6",
                        help="figure ids, e.g. 1..6 or 3,5")
    parser.add_argument("--out", default="figures", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ids = parse_figure_range(args.figures)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        specs = specs_from_manifests(args.manifest, ids, Path(args.out))
        for spec in specs:
            path = render(spec)
            print(f"figure {spec.figure_id}: {path}")
    except RenderError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
