"""Command-line harness.

Subcommands: separate, prob-curve, deviation, mutual-cover, mean-width,
calibrate.  Each takes --config <file.json>, --seed <u64>, --out <dir>,
--trials <n>, --threads <n> (SEPCAP_THREADS as fallback).  Exit codes:
0 success, 2 config error, 3 infeasible scenario.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .errors import ConfigError, InfeasibleScenarioError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_RUNNERS = {
    "separate": harness.run_separation_experiment,
    "prob-curve": harness.run_probability_curve,
    "deviation": harness.run_deviation_sweep,
    "mutual-cover": harness.run_mutual_cover,
    "mean-width": harness.run_mean_width,
    "calibrate": harness.run_calibration,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepcap",
        description="Seeded experiments on the separation capacity of random ReLU layers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in _RUNNERS.items():
        p = sub.add_parser(name, help=runner.__doc__.splitlines()[0] if runner.__doc__ else None)
        p.add_argument("--config", required=True, help="experiment config JSON file")
        p.add_argument("--seed", type=int, default=None, help="master seed (u64), overrides the config")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir or 'out')")
        p.add_argument("--trials", type=int, default=None, help="trial count override")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (fallback: SEPCAP_THREADS, then 1)")
        p.add_argument("--no-plots", action="store_true", help="skip SVG emission")
    return parser


def _resolve_threads(arg_threads) -> int:
    if arg_threads is not None:
        return max(1, arg_threads)
    env = os.environ.get("SEPCAP_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"SEPCAP_THREADS must be an integer, got {env!r}") from exc
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or raw.get("output_dir") or "out"
    try:
        cfg = harness.ExperimentConfig.from_dict(raw)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.trials is not None:
            cfg.trials = args.trials
        cfg.threads = _resolve_threads(args.threads)
        result = _RUNNERS[args.command](cfg)
        harness.write_result_files(result, out_dir, plots=not args.no_plots)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleScenarioError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    summary = {"command": args.command, "out": out_dir}
    if result.trial_records:
        summary["success_fraction"] = result.success_fraction()
    print(json.dumps(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
