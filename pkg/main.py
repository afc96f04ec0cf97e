#!/usr/bin/env python3
"""
Complex-Action Lab
Main entry point for running, sweeping and validating scenario configs
"""

import argparse
import dataclasses
import logging
import os
import sys
from typing import List, Optional

# Load environment variables from .env file
try:
    from dotenv import load_dotenv

    load_dotenv()
except ImportError:
    # dotenv not available, continue without it
    pass

from config import Config, ScenarioConfig, load_scenario_config
from errors import ConfigurationError, LabError
from parallel import MAX_SEED
from result_writer import ResultWriter
from scenario_runner import SCENARIOS, ScenarioRunner
from sweep_processor import SweepProcessor, parse_sweep_values

logger = logging.getLogger(__name__)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", required=True, help="Path to the scenario config (JSON)")
    common.add_argument("--seed", type=int, help="Master seed, overrides the config (0 <= seed < 2**64)")
    common.add_argument("--out", "-o", help="Output directory, overrides the config")
    common.add_argument("--workers", "-w", type=int, help="Worker threads (default: 1 or CAL_WORKERS)")
    common.add_argument("--verbose", "-v", action="store_true", help="Enable verbose output")

    parser = argparse.ArgumentParser(
        description="Numerical experiments with complex-action path integrals",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py list-scenarios
  python main.py validate --config configs/double_slit.json
  python main.py run --config configs/propagator_check.json --seed 7 --out output/check
  python main.py run --config configs/measurement.json --workers 4
  python main.py sweep --config configs/double_slit.json --param gap --values 0 0.5 1 2
  python main.py sweep --config configs/higgs_toy.json --param m2_i --values -1 0 1
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("list-scenarios", help="List scenario kinds, parameters and output tables")
    commands.add_parser("validate", parents=[common], help="Check a config without running it")
    commands.add_parser("run", parents=[common], help="Run one scenario")

    sweep = commands.add_parser("sweep", parents=[common], help="Run a scenario over values of one parameter")
    sweep.add_argument("--param", "-p", required=True, help="Sweepable parameter name")
    sweep.add_argument("--values", nargs="*", default=[], help="Parameter values (JSON literals)")
    sweep.add_argument(
        "--continue-on-error", action="store_true", help="Keep sweeping when a point fails numerically"
    )

    return parser.parse_args(argv)


def configure_logging(settings: Config, verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, settings.log_level),
        format="%(levelname)s %(name)s: %(message)s",
    )


def list_scenarios() -> int:
    """Print every scenario kind with its parameters, sweepable fields and tables."""
    print("=" * 60)
    print("Available scenarios")
    print("=" * 60)
    for spec in SCENARIOS.values():
        print(f"\n{spec.kind}: {spec.description}")
        print("  Parameters:")
        for name, value in spec.defaults.items():
            print(f"    {name} = {value!r}")
        print(f"  Sweepable: {', '.join(spec.sweepable)}")
        print("  Tables:")
        for name, columns in spec.tables.items():
            print(f"    {name}: {columns}")
    return 0


def load_for_command(args: argparse.Namespace) -> ScenarioConfig:
    """Load the config named on the command line and apply the --seed/--out overrides."""
    cfg = load_scenario_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < MAX_SEED:
            raise ConfigurationError(f"must be in [0, 2**64), got {args.seed}", field="seed")
        cfg = dataclasses.replace(cfg, seed=args.seed)
    output_directory = args.out or os.getenv("CAL_OUTPUT_DIR") or cfg.output_directory
    return dataclasses.replace(cfg, output_directory=output_directory)


def print_banner(title: str, cfg: ScenarioConfig, settings: Config) -> None:
    print("=" * 60)
    print(title)
    print("=" * 60)
    print(f"Scenario: {cfg.kind}")
    print(f"Seed: {cfg.seed}")
    print(f"Output: {cfg.output_directory}")
    print(f"Workers: {settings.workers}")
    print("-" * 60)


def run_command(cfg: ScenarioConfig, settings: Config) -> int:
    print_banner("Complex-Action Lab", cfg, settings)
    result = ScenarioRunner(settings).run(cfg)
    paths = ResultWriter(cfg.output_directory).write_results(cfg, result)

    print("\nSummary:")
    for key, value in result.summary.items():
        print(f"  {key}: {value}")
    print("\nChecks:")
    for check in result.checks:
        mark = "✓" if check.passed else "✗"
        print(f"  {mark} {check.name}: {check.detail}")
    print("\nFiles:")
    for path in paths:
        print(f"  {path}")

    print("\n" + "=" * 60)
    if result.passed:
        print("Run completed successfully!")
        return 0
    print("Run completed with failed checks")
    return 1


def sweep_command(cfg: ScenarioConfig, settings: Config, args: argparse.Namespace) -> int:
    values = parse_sweep_values(args.values)
    print_banner("Complex-Action Lab sweep", cfg, settings)
    print(f"Parameter: {args.param}")
    print(f"Values: {values}")

    processor = SweepProcessor(settings)
    results = processor.run(cfg, args.param, values, continue_on_error=args.continue_on_error)
    paths = processor.write(cfg, args.param, results, ResultWriter(cfg.output_directory))

    print("\n" + "=" * 60)
    print("SWEEP SUMMARY")
    print("=" * 60)
    print(f"Total points: {results['total']}")
    print(f"Successful: {results['successful']}")
    print(f"Failed: {results['failed']}")
    for error in results["errors"]:
        print(f"  ✗ {args.param}={error['value']!r}: {error['error']}")
    for path in paths:
        print(f"  {path}")

    if results["failed"] or not all(row["passed"] for row in results["rows"]):
        return 1
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main function."""
    args = parse_arguments(argv)

    if args.command == "list-scenarios":
        return list_scenarios()

    try:
        settings = Config.from_env(workers=args.workers)
        configure_logging(settings, args.verbose)
        cfg = load_for_command(args)

        if args.command == "validate":
            print(f"Config OK: {args.config} ({cfg.kind}, seed {cfg.seed})")
            return 0
        if args.command == "run":
            return run_command(cfg, settings)
        return sweep_command(cfg, settings, args)

    except LabError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("\nInterrupted by user", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
