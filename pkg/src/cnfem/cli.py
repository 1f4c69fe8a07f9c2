"""Command-line entry point for the experiment runners.

Subcommands: ``pincers``, ``model1``, ``model2`` run the named experiment
from a TOML config; ``check`` runs the built-in verification gate and
exits nonzero on failure.  Unknown subcommands or unreadable configs exit
with code 2.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import ConfigError, load_config, run_check, run_experiment

_KINDS = {"pincers": "pincers_illustration", "model1": "model1",
          "model2": "model2"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnfem",
        description="Planar hyperelasticity with a self-interpenetration "
                    "penalty: experiment runners.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _KINDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--evaluator", default=None,
                       choices=["full", "accelerated", "both"],
                       help="penalty evaluation strategy")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for the penalty double loop")
        p.add_argument("--trace", action="store_true", default=None,
                       help="write contributing-pair traces")
    sub.add_parser("check", help="run the verification gate")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if err.code is not None else 2

    if args.command == "check":
        return 0 if run_check() else 1

    try:
        cfg = load_config(args.config, out_dir=args.out,
                          evaluator=args.evaluator, threads=args.threads,
                          trace=args.trace)
        expected = _KINDS[args.command]
        if cfg.kind != expected:
            raise ConfigError(
                f"config kind {cfg.kind!r} does not match subcommand "
                f"{args.command!r} (expected {expected!r})")
    except (OSError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2

    paths = run_experiment(cfg)
    for key in sorted(paths):
        print(f"{key}: {paths[key]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
