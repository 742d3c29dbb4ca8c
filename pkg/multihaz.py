#!/usr/bin/env python3
"""
Multiverse Hazard Toolkit - Main Entry Point

Simulates potential-outcome lattices, estimates marginal, cCT and iCP
hazards from cohorts, summarizes the multiverse of possible worlds and
verifies the bounds between them.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from src.core_data import ARMS, ColumnSchema
from src.dgp import list_presets
from src.errors import ConfigError, HazardError, VerificationError
from src.multihaz_system import MultiverseHazardToolkit, parse_kinds, parse_seeds

# Configure module logger
logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False) -> None:
    """Configure logging based on verbosity level."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%H:%M:%S'
    )


def parse_times(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--times: expected a comma list of numbers, got {text!r}")


def display_simulation(results: Dict[str, Any]) -> None:
    print("🎲 Simulation")
    print(f"Preset/config: {results['config'].get('name') or 'custom'}")
    print(f"Subjects: {results['m']}  Event times: {results['n_times']}")
    print(f"Actual deaths: {results['actual_deaths']}  Observed events: {results['observed_events']}")
    print(f"Lattice: {results['lattice_path']}")
    print(f"Cohort: {results['cohort_path']}")


def display_estimates(summary: Dict[str, Any]) -> None:
    print(f"📈 Estimates up to tau={summary['tau']} ({summary['m']} subjects, strata {summary['strata']})")
    for curve in summary["curves"]:
        label = f"{curve['kind']} arm {curve['arm']}"
        if curve["stratum"] is not None:
            label += f" stratum {curve['stratum']}"
        s = curve["summary"]
        print(f"  {label}: cumulative={s['cumulative']:.4f} average={s['average']:.4f}")
        if curve["warnings"]:
            print(f"    ⚠️ {len(curve['warnings'])} empty risk set cell(s)")


def display_multiverse(payload: Dict[str, Any]) -> None:
    print(f"🌌 Multiverse of {payload['n_worlds']} worlds up to tau={payload['tau']}")
    for name, g in payload["groups"].items():
        print(
            f"  {name}: cumulative={g['cumulative']:.4f} average={g['average']:.4f} "
            f"actual risk={g['actual_risk']:.4f}"
        )
    status = "✅ all bounds hold" if payload["bounds_hold"] else "❌ bound violation"
    print(status)


def display_verification(summary: Dict[str, Any]) -> None:
    print(f"🔍 Verification over {summary['n_seeds']} seeds (tolerance {summary['tolerance']})")
    print(f"Bounds: {'pass' if summary['bounds_passed'] else 'FAIL'}")
    print(f"Oracle: {'pass' if summary['oracle_passed'] else 'FAIL'} (max discrepancy {summary['max_discrepancy']:.4g})")
    for entry in summary["seeds"]:
        if not entry["passed"]:
            print(f"  ❌ seed {entry['seed']}: {entry.get('error') or 'check failed'}")
    print(f"{'✅ passed' if summary['passed'] else '❌ failed'}: {summary['n_seeds'] - summary['n_failed']}/{summary['n_seeds']}")


def display_presets() -> None:
    print("📚 Available presets:")
    for name, description in list_presets().items():
        print(f"  {name:22s} {description}")


def cmd_simulate(toolkit: MultiverseHazardToolkit, args: argparse.Namespace) -> None:
    if args.replay:
        config = toolkit.config_from_manifest(args.replay)
    else:
        config = toolkit.resolve_config(args.config, args.preset, m=args.m, seed=args.seed)
    display_simulation(toolkit.simulate(config, args.out))


def cmd_estimate(toolkit: MultiverseHazardToolkit, args: argparse.Namespace) -> None:
    schema = ColumnSchema(
        id=args.col_id, arm=args.col_arm, stratum=args.col_stratum, time=args.col_time, event=args.col_event
    )
    arms = ARMS if args.arm is None else (args.arm,)
    summary = toolkit.estimate(
        args.cohort, args.out, arms=arms, tau=args.tau, kinds=parse_kinds(args.kinds), schema=schema
    )
    display_estimates(summary)


def cmd_multiverse(toolkit: MultiverseHazardToolkit, args: argparse.Namespace) -> None:
    payload = toolkit.multiverse(args.lattice, args.out, tau=args.tau, times=parse_times(args.times))
    display_multiverse(payload)


def cmd_verify(toolkit: MultiverseHazardToolkit, args: argparse.Namespace) -> None:
    config = toolkit.resolve_config(args.config, args.preset, m=args.m)
    base = toolkit.seed if args.seed is None else args.seed
    seeds = parse_seeds(args.seeds, base)
    summary = toolkit.verify(config, seeds, tolerance=args.tolerance, out_dir=args.out)
    display_verification(summary)
    if not summary["passed"]:
        raise VerificationError(f"{summary['n_failed']} of {summary['n_seeds']} seeds failed verification")


def cmd_presets(toolkit: MultiverseHazardToolkit, args: argparse.Namespace) -> None:
    display_presets()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Multiverse Hazard Toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python multihaz.py simulate --preset noncollapsible --m 1000 --seed 7 --out runs/sim
  python multihaz.py estimate runs/sim/cohort.csv --kinds all --out runs/est
  python multihaz.py multiverse runs/sim/lattice.csv --tau 3 --out runs/mv
  python multihaz.py verify --preset default --seeds 50 --out runs/verify
        """
    )
    parser.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Enable verbose logging'
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p: argparse.ArgumentParser) -> None:
        source = p.add_mutually_exclusive_group()
        source.add_argument('--config', type=str, help='DGP config JSON file')
        source.add_argument('--preset', type=str, help='Named preset (see `presets`)')
        p.add_argument('--m', type=int, help='Override the sample size')
        p.add_argument('--seed', type=int, help='Seed (default: MULTIHAZ_SEED or 0)')

    simulate = sub.add_parser('simulate', help='Generate a lattice and its observed cohort')
    add_config_flags(simulate)
    simulate.add_argument('--replay', type=str, help='Re-run the config recorded in a manifest.json')
    simulate.add_argument('--out', type=str, default='out', help='Output directory')
    simulate.set_defaults(handler=cmd_simulate)

    estimate = sub.add_parser('estimate', help='Estimate hazard curves from a cohort CSV')
    estimate.add_argument('cohort', type=str, help='Cohort CSV file')
    estimate.add_argument('--arm', type=int, choices=ARMS, help='Arm to estimate (default: both)')
    estimate.add_argument('--tau', type=float, help='Horizon (default: last event time)')
    estimate.add_argument('--kinds', type=str, default='all',
                          help='Comma list of marginal,cct,icp,conditional or "all"')
    estimate.add_argument('--out', type=str, default='out', help='Output directory')
    for column in ("id", "arm", "stratum", "time", "event"):
        estimate.add_argument(f'--col-{column}', type=str, default=column,
                              help=f'Header of the {column} column')
    estimate.set_defaults(handler=cmd_estimate)

    multiverse = sub.add_parser('multiverse', help='Summarize the worlds of a lattice file')
    multiverse.add_argument('lattice', type=str, help='Lattice CSV file')
    multiverse.add_argument('--tau', type=float, help='Horizon (default: last world time)')
    multiverse.add_argument('--times', type=str, help='Comma list of world times (default: 1..J)')
    multiverse.add_argument('--out', type=str, default='out', help='Output directory')
    multiverse.set_defaults(handler=cmd_multiverse)

    verify = sub.add_parser('verify', help='Check bounds and estimator-oracle agreement over seeds')
    add_config_flags(verify)
    verify.add_argument('--seeds', type=str, default='50',
                        help='Seed count N (seed..seed+N-1) or comma list')
    verify.add_argument('--tolerance', type=float, help='Oracle tolerance (default: MULTIHAZ_TOLERANCE or 0.02)')
    verify.add_argument('--workers', type=int, help='Worker threads (default: MULTIHAZ_WORKERS or 4)')
    verify.add_argument('--out', type=str, default='out', help='Output directory')
    verify.set_defaults(handler=cmd_verify)

    presets = sub.add_parser('presets', help='List the named DGP presets')
    presets.set_defaults(handler=cmd_presets)
    return parser


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point for the toolkit."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logging
    setup_logging(args.verbose)

    try:
        toolkit = MultiverseHazardToolkit(workers=getattr(args, "workers", None))
        args.handler(toolkit, args)

    except HazardError as e:
        print(f"❌ {type(e).__name__}: {e}")
        sys.exit(e.exit_code)

    except KeyboardInterrupt:
        print("\n\n👋 Program interrupted by user")
        sys.exit(130)

    except Exception as e:
        print(f"❌ Fatal Error: {e}")
        logging.error(f"Fatal error: {e}", exc_info=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
