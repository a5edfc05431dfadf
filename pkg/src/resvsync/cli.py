"""Command line entry point: `resv-sync <experiment> --config <path>`.

Exit codes: 0 on success, 2 for configuration errors, 3 when an orbit
diverges numerically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dynamics import DivergenceError
from .experiments import EXPERIMENTS, ConfigError, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resv-sync",
        description="Reservoir generalised-synchronisation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", required=True, help="JSON config file")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        out_dir = Path(args.out) if args.out else Path.cwd() / "out" / args.command
        manifest = run_experiment(args.command, config, out_dir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as err:
        print(f"numerical divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    print(f"{args.command}: wrote {len(manifest.files)} files to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
