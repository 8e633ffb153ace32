"""Command-line entry point for experiment suites and the selftest."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from typing import Optional

from .harness import ExperimentConfig, load_config, run_experiment
from .selftest import selftest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaimfit",
        description="Fit additive index models and run the bundled "
                    "synthetic experiment suites.")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (flat schema; flags override it)")
    parser.add_argument("--suite", choices=("single", "table1", "table2"))
    parser.add_argument("--trials", type=int, metavar="N")
    parser.add_argument("--seed", type=int, metavar="S", dest="base_seed")
    parser.add_argument("--workers", type=int, metavar="W")
    parser.add_argument("--out", metavar="DIR", dest="out_dir")
    parser.add_argument("--trace-every", type=int, metavar="N", dest="trace_every")
    parser.add_argument("--selftest", action="store_true",
                        help="run the fast invariant checks and exit")
    parser.add_argument("--svg", action="store_true", dest="emit_svg",
                        help="emit SVG charts next to trace CSVs")
    single = parser.add_argument_group("single-suite / preset overrides")
    single.add_argument("--family", choices=("gaussian", "poisson"))
    single.add_argument("--link", choices=("identity", "log", "inverse-softplus"))
    single.add_argument("--algorithms", metavar="A[,B]",
                        help="comma-separated subset of gd,vi,ppr")
    single.add_argument("--d", type=int)
    single.add_argument("--m", type=int)
    single.add_argument("--n", type=int)
    single.add_argument("--basis-size", type=int, dest="n_basis")
    single.add_argument("--iterations", type=int)
    single.add_argument("--step-alpha", type=float, dest="step_alpha")
    single.add_argument("--step-beta", type=float, dest="step_beta")
    single.add_argument("--variance", type=float)
    single.add_argument("--truth", choices=("table1", "block"), dest="truth_kind")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for key in ("suite", "trials", "base_seed", "workers", "out_dir",
                "trace_every", "family", "link", "d", "m", "n", "n_basis",
                "iterations", "step_alpha", "step_beta", "variance",
                "truth_kind"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if args.algorithms is not None:
        overrides["algorithms"] = tuple(args.algorithms.split(","))
    if args.emit_svg:
        overrides["emit_svg"] = True
    return replace(config, **overrides)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.selftest:
        return 0 if selftest() else 1
    config = _config_from_args(args)
    result = run_experiment(config)
    print(f"wrote {result.trials_csv}")
    print(f"wrote {result.summary_csv}")
    print(f"wrote {result.metadata_json}")
    width = max(len(s["setting"]) for s in result.summary) if result.summary else 8
    print(f"{'setting':<{width}}  {'algorithm':<9}  {'metric':<14}  "
          f"{'mean':>12}  {'sd':>12}")
    for row in result.summary:
        print(f"{row['setting']:<{width}}  {row['algorithm']:<9}  "
              f"{row['metric']:<14}  {row['mean']:>12.6g}  {row['sd']:>12.6g}")
    if result.failures:
        print(f"{len(result.failures)} trial(s) failed and were skipped; "
              f"see metadata.json")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
