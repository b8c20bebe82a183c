"""
Command-line interface for graftrl.

Runs the noeg / eg / autoeg conditions over several seeds, recomputes
aggregates from run directories and replays the grafting demo.
"""

import argparse
import asyncio
import logging
import sys
from typing import Any, Dict, List, Optional

from .envs import ENV_REGISTRY
from .exceptions import RunAbortedError
from .experiment import ExperimentConfig, load_config_file, parse_seeds, report, run_experiment
from .manager import MODES


def setup_logging(verbose: bool = False):
    """Set up logging for CLI usage."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(levelname)s: %(message)s'
    )
    # The package logger carries its own handler; route it through the root one instead.
    package_logger = logging.getLogger('graftrl')
    package_logger.handlers.clear()
    package_logger.setLevel(level)


def build_experiment_config(args) -> ExperimentConfig:
    """Config file values first, then command-line flags on top."""
    values: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    overrides: Dict[str, Any] = {
        'env': args.env,
        'mode': args.mode,
        'out_dir': args.out,
        'eps': args.epsilon,
        'episodes': args.episodes,
        'seeds': parse_seeds(args.seeds) if args.seeds else None,
        'policy_window': args.policy_window,
        'parallel': args.parallel,
        'save_agents': args.save_agents or None,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_mapping(values)


def cmd_run(args):
    """Train every seed of a condition and write the CSVs."""
    setup_logging(args.verbose)

    cfg = build_experiment_config(args)
    print(f"Running {cfg.mode} on {cfg.env}: seeds {cfg.seeds}, {cfg.episodes} episodes each...")
    try:
        reports = asyncio.run(run_experiment(cfg))
    except RunAbortedError as e:
        for r in e.reports:
            print(f"⚠️  {r.out_dir}: {len(r.runs)} completed, aborted seeds {sorted(r.aborted)}")
        raise

    for r in reports:
        label = r.mode if r.eps is None else f"{r.mode} eps={r.eps:g}"
        print(f"\n📊 {label} ({r.out_dir})")
        for row in r.aggregate:
            print(f"   {row.metric:<15} {row.mean:>12.3f} ± {row.stddev:.3f}  (n={row.n_seeds})")
    print("\n✅ Experiment completed")


def cmd_report(args):
    """Recompute aggregates from per-run CSVs."""
    setup_logging(args.verbose)

    rows, comparison = report(args.in_dir, args.baseline, args.policy_window)
    print(f"📊 Aggregate for {args.in_dir}:")
    for row in rows:
        print(f"   {row.metric:<15} {row.mean:>12.3f} ± {row.stddev:.3f}  (n={row.n_seeds})")
    if comparison is not None:
        print(f"\n⚖️  Against baseline {args.baseline}:")
        print(f"   AUC                 {comparison.auc_a:.3f} vs {comparison.auc_b:.3f}")
        print(f"   AUC improvement     {comparison.improvement_of_means:+.1%} (of seed means)")
        if comparison.mean_improvement is not None:
            print(f"                       {comparison.mean_improvement:+.1%} (mean over matched seeds)")
        print(f"   Policy quality      {comparison.policy_quality_a:.3f} vs {comparison.policy_quality_b:.3f}")
    print("\n✅ Aggregate written")


def cmd_graft_demo(args):
    """Run the grafting demonstration."""
    setup_logging(args.verbose)

    print("🚀 Running grafting demo...")
    from .demo_graft import demo_graft
    demo_graft(args.dump)


def create_parser():
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        description="Experience grafting and automated grafting-threshold tuning for DDPG",
        prog="graftrl"
    )

    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Enable verbose logging"
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    run_parser = subparsers.add_parser(
        "run",
        help="Train one condition over several seeds"
    )
    run_parser.add_argument(
        "--env",
        choices=sorted(ENV_REGISTRY),
        help="Environment name"
    )
    run_parser.add_argument(
        "--mode",
        choices=MODES,
        help="noeg (plain DDPG), eg (fixed threshold) or autoeg (Tutor-chosen threshold)"
    )
    run_parser.add_argument(
        "--epsilon",
        type=float,
        action="append",
        help="Grafting threshold for mode eg; repeat to sweep several values"
    )
    run_parser.add_argument(
        "--episodes",
        type=int,
        help="Episodes per seed (default: 2000)"
    )
    run_parser.add_argument(
        "--seeds",
        nargs="+",
        help="Seeds as '1,2,3' or '1 2 3' (default: 1 2 3 4 5)"
    )
    run_parser.add_argument(
        "--out",
        help="Output directory"
    )
    run_parser.add_argument(
        "--config",
        help="YAML file with flat config keys; flags override it"
    )
    run_parser.add_argument(
        "--policy-window",
        type=int,
        help="Episodes averaged for policy quality (default: 100)"
    )
    run_parser.add_argument(
        "--parallel",
        type=int,
        help="Seeds trained concurrently (default: 1)"
    )
    run_parser.add_argument(
        "--save-agents",
        action="store_true",
        help="Write each run's final EG agent checkpoint"
    )
    run_parser.set_defaults(func=cmd_run)

    report_parser = subparsers.add_parser(
        "report",
        help="Recompute aggregates from a run directory"
    )
    report_parser.add_argument(
        "--in",
        dest="in_dir",
        required=True,
        help="Directory holding run_*.csv files"
    )
    report_parser.add_argument(
        "--baseline",
        help="Directory of the baseline condition to compare against"
    )
    report_parser.add_argument(
        "--policy-window",
        type=int,
        help="Override the policy-quality window recorded in config.yaml"
    )
    report_parser.set_defaults(func=cmd_report)

    demo_parser = subparsers.add_parser(
        "graft-demo",
        help="Graft the two-trial walker fixture and print the result"
    )
    demo_parser.add_argument(
        "--dump",
        help="Also write the trials and the synthetic trajectory to this CSV"
    )
    demo_parser.set_defaults(func=cmd_graft_demo)

    return parser


def main(argv: Optional[List[str]] = None):
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    try:
        args.func(args)
        return 0
    except KeyboardInterrupt:
        print("\n❌ Operation cancelled")
        return 1
    except Exception as e:
        print(f"❌ Error: {e}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
