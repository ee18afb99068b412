"""Command-line entry point.

Usage::

    credlabel run CONFIG [--out DIR] [--seed S] [--workers K] [--full-scale]

The config file is INI-style; see README.md for the schema. Results are
CSV tables plus a result.json provenance record in the output directory.
"""

from __future__ import annotations

import argparse
import sys

from .harness import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="credlabel",
        description="Importance-labeling experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment described by a config file")
    run_p.add_argument("config", help="path to the experiment config")
    run_p.add_argument("--out", default=None, help="output directory (overrides config)")
    run_p.add_argument("--seed", type=int, default=None, help="master seed override")
    run_p.add_argument("--workers", type=int, default=None, help="worker thread count")
    run_p.add_argument(
        "--full-scale",
        action="store_true",
        help="use the full-size pool and label budgets instead of desk-scale defaults",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(
            args.config,
            out_dir=args.out,
            seed=args.seed,
            workers=args.workers,
            full_scale=args.full_scale,
        )
    return 2


if __name__ == "__main__":
    sys.exit(main())
