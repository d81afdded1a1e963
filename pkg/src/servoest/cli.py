"""Command-line entry point.

Subcommands:
  simulate        plant-only run (truth trajectory + noisy measurements)
  compare-models  nominal-model accuracy vs. the actual plant on sinusoids
  estimate        single-realization estimator run
  sweep           full realization ensemble over the particle-count sweep
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ConfigError, parse_config
from .runner import (run_compare_models, run_estimate, run_scenario,
                     run_simulate)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH",
                   help="YAML config file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, metavar="U64",
                   help="override run.base_seed")
    p.add_argument("--out", required=True, metavar="DIR",
                   help="output directory")
    p.add_argument("--threads", type=int, default=1, metavar="N",
                   help="realizations to run in parallel (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="servoest",
        description="State-estimation benchmark for a nonlinear "
                    "servo-hydraulic plant")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("simulate", "simulate the actual plant and write the truth "
                         "and measurement records"),
            ("compare-models", "score the nominal plant models against "
                               "the actual plant"),
            ("estimate", "run the estimators on a single realization"),
            ("sweep", "run the full realization ensemble and particle "
                      "sweep")):
        _add_common(sub.add_parser(name, help=text))
    return parser


def _load_config(args):
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = parse_config(f.read())
    else:
        cfg = parse_config(None)
    if args.seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, base_seed=args.seed))
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    runner = {
        "simulate": run_simulate,
        "compare-models": run_compare_models,
        "estimate": run_estimate,
        "sweep": run_scenario,
    }[args.command]
    result = runner(cfg, args.out, threads=args.threads)
    print(result.manifest_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
