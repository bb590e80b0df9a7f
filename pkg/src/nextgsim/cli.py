"""Command-line entry point.

    nextgsim run --experiment <name> [--config cfg.json] [--seed N] [--out DIR]
    nextgsim validate --config cfg.json
    nextgsim list

Exit codes: 0 success, 2 configuration error, 3 runtime/simulation error.
The environment variable NEXTGSIM_LOG (debug/info/warning/error) controls
log verbosity only.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from .config import EXPERIMENT_NAMES, ConfigError, ExperimentConfig, load_config
from .harness import CSV_SCHEMAS, run_experiment

log = logging.getLogger("nextgsim")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nextgsim",
                                     description="Reproducible access-network experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write CSV/figure outputs")
    run.add_argument("--experiment", choices=EXPERIMENT_NAMES,
                     help="experiment name (overrides the config file)")
    run.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config file)")
    run.add_argument("--out", help="output directory (overrides the config file)")
    figs = run.add_mutually_exclusive_group()
    figs.add_argument("--figures", dest="figures", action="store_true", default=True,
                      help="render a PNG alongside the CSV (default)")
    figs.add_argument("--no-figures", dest="figures", action="store_false")

    val = sub.add_parser("validate", help="check a config file and exit")
    val.add_argument("--config", required=True)

    sub.add_parser("list", help="print experiment names and their CSV columns")
    return parser


def _configure_logging():
    level = os.environ.get("NEXTGSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    args = _build_parser().parse_args(argv)

    if args.command == "list":
        for name in EXPERIMENT_NAMES:
            print(f"{name}: {','.join(CSV_SCHEMAS[name])}")
        return 0

    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print("ok")
        return 0

    if args.experiment:
        config = dataclasses.replace(config, experiment=args.experiment)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("config error: seed must be a 64-bit unsigned integer", file=sys.stderr)
            return 2
        config = dataclasses.replace(config, seed=args.seed)
    if args.out:
        config = dataclasses.replace(config, out_dir=args.out)
    if config.experiment is None:
        print(f"config error: no experiment selected; use --experiment with one of "
              f"{', '.join(EXPERIMENT_NAMES)}", file=sys.stderr)
        return 2

    try:
        manifest = run_experiment(config, render_figures=args.figures)
    except Exception as exc:  # simulation/runtime failure
        log.exception("experiment failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    print(f"{manifest.experiment}: wrote {', '.join(manifest.outputs)} "
          f"to {config.out_dir} in {manifest.duration_s:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
