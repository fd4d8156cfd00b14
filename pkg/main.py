"""
Main CLI Application for the Dynamic Contract Lab.

Subcommands:
    sweep-delta   utility after T rounds vs. the mesh step
    over-time     running average utility at checkpoints
    limit-opt     final-window average of long runs
    run           fully logged runs with per-run regret
    census        feasible-cell census and width-dimension fit
    verify        desk-scale property suites
    history       past invocations from the run registry; --id N shows one in full

Experiment commands take --model FILE to run on a worker-type model document
instead of the configured environment.
"""

import argparse
import sys

from colorama import init
from tabulate import tabulate

from src.experiments.commands import (
    cmd_census,
    cmd_limit_opt,
    cmd_over_time,
    cmd_run,
    cmd_sweep_delta,
)
from src.experiments.config import load_experiment_config
from src.experiments.verify import SUITES, cmd_verify
from src.export.pdf_report import generate_pdf_report
from src.model.loader import load_model_document
from src.storage.database import RunRegistry
from src.utils.helpers import color_text, format_estimate, load_config, verdict_text
from src.utils.logger import get_logger, setup_logging

logger = get_logger(__name__)

# Initialize colorama for Windows support
init(autoreset=True)

EXPERIMENT_COMMANDS = {
    'sweep-delta': cmd_sweep_delta,
    'over-time': cmd_over_time,
    'limit-opt': cmd_limit_opt,
    'run': cmd_run,
}


def print_header(text):
    """Print a formatted header."""
    print("\n" + "=" * 70)
    print(color_text(f"  {text}", 'cyan'))
    print("=" * 70 + "\n")


def print_section(text):
    """Print a formatted section header."""
    print("\n" + color_text(f">>> {text}", 'yellow'))
    print("-" * 70)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='contract-lab',
        description='Dynamic contract design laboratory',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--log-level', default=None, help='override the configured log level')
    parser.add_argument('--registry-dir', default='data', help='directory of the run registry')
    sub = parser.add_subparsers(dest='command', required=True)

    for name in EXPERIMENT_COMMANDS:
        p = sub.add_parser(name, help=f'{name} experiment')
        p.add_argument('--config', help='experiment config (JSON or YAML)')
        p.add_argument('--model', help='worker-type model file; replaces the environment')
        p.add_argument('--runs', type=int)
        p.add_argument('--horizon', type=int)
        p.add_argument('--limit-horizon', type=int)
        p.add_argument('--seed', type=int, dest='base_seed')
        p.add_argument('--workers', type=int)
        p.add_argument('--output-dir')
        p.add_argument('--logs', action='store_true', help='keep per-round logs')
        p.add_argument('--debug', action='store_true', help='check invariants every round')
        p.add_argument('--excel', action='store_true', help='also write an Excel workbook')
        p.add_argument('--pdf', action='store_true', help='also write a PDF summary')

    p = sub.add_parser('census', help='feasible-cell census')
    p.add_argument('--config', help='experiment config; its environment is used')
    p.add_argument('--market', default='uniform')
    p.add_argument('--candidates', default='uniform_mesh', choices=['uniform_mesh', 'full_space'])
    p.add_argument('--delta', type=float, default=1 / 64)
    p.add_argument('--max-depth', type=int, default=6)
    p.add_argument('--beta', type=float)
    p.add_argument('--output-dir')

    p = sub.add_parser('verify', help='run the property suites')
    p.add_argument('--suites', help=f"comma-separated subset of: {', '.join(SUITES)}")
    p.add_argument('--output-dir')
    p.add_argument('--golden-dir')
    p.add_argument('--pdf', action='store_true')

    p = sub.add_parser('history', help='list past invocations')
    p.add_argument('--limit', type=int, default=20)
    p.add_argument('--filter', dest='filter_command')
    p.add_argument('--id', type=int, dest='entry_id', help='show one invocation in full')
    return parser


def run_experiment(args, registry: RunRegistry) -> int:
    environment = load_model_document(args.model) if args.model else None
    config = load_experiment_config(
        args.config, environment=environment, runs=args.runs, horizon=args.horizon,
        limit_horizon=args.limit_horizon, base_seed=args.base_seed, workers=args.workers,
        output_dir=args.output_dir, per_round_logs=args.logs or None,
        debug_asserts=args.debug or None)
    print_header(f"{args.command}: {len(config.algorithms)} algorithm(s), "
                 f"{len(config.deltas)} delta(s), {config.runs} run(s)")

    output = EXPERIMENT_COMMANDS[args.command](config, excel=args.excel)
    first = next(iter(output.frames.values()))
    if {'mean_utility', 'se'} <= set(first.columns):
        first = first.assign(estimate=[format_estimate(m, s)
                                       for m, s in zip(first['mean_utility'], first['se'])])
    print_section("Results")
    print(tabulate(first.head(40), headers='keys', tablefmt='grid', showindex=False))

    if args.pdf:
        path = output.files[0].parent / f"{output.command}.pdf"
        output.files.append(generate_pdf_report(path, args.command, tables=output.frames,
                                                metadata=output.metadata))
    print_section("Outputs")
    for path in output.files:
        print(f"  {path}")
    registry.record(args.command, config.digest, output.files, 'done')
    return 0


def run_census(args, registry: RunRegistry) -> int:
    environment = {'market': args.market}
    if args.config:
        environment = load_experiment_config(args.config).environment
    candidates = {'name': args.candidates, 'delta': args.delta}
    output = cmd_census(environment, candidates, args.max_depth, beta=args.beta,
                        output_dir=args.output_dir)

    print_header(f"Census to depth {args.max_depth}")
    print(tabulate(output.frames['counts'], headers='keys', tablefmt='grid', showindex=False))
    fit = output.metadata['fit']
    print(f"\nWidth-dimension slope: {fit['slope']:.4f} (r2 {fit['r2']:.3f})")
    for flag in output.metadata['flags']:
        print(color_text(f"  ! {flag}", 'yellow'))
    registry.record('census', None, output.files, 'flagged' if output.metadata['flags'] else 'done',
                    {'fit': fit})
    return 0


def run_verify(args, registry: RunRegistry) -> int:
    selected = None
    if args.suites is not None:
        selected = [s.strip() for s in args.suites.split(',') if s.strip()]
    report = cmd_verify(selected, output_dir=args.output_dir, golden_dir=args.golden_dir)

    print_header("Verification")
    rows = [[v.name, verdict_text(v.passed),
             f"{v.seconds:.1f}s"] for v in report.verdicts]
    print(tabulate(rows, headers=['Suite', 'Verdict', 'Time'], tablefmt='grid'))
    if args.pdf:
        path = report.files[0].parent / 'verify.pdf'
        report.files.append(generate_pdf_report(path, 'Verification', verdicts=report.verdicts))
    verdict = 'pass' if report.passed else 'fail'
    registry.record('verify', None, report.files, verdict,
                    {v.name: v.passed for v in report.verdicts})
    if not report.passed:
        print(color_text("\nOne or more suites failed.", 'red'))
        return 1
    print(color_text("\nAll suites passed.", 'green'))
    return 0


def show_history(args, registry: RunRegistry) -> int:
    if args.entry_id is not None:
        return show_entry(args.entry_id, registry)
    history = registry.get_history(args.limit, args.filter_command)
    print_header("Run history")
    if not history:
        print("No recorded invocations.")
        return 0
    print(tabulate(history, headers='keys', tablefmt='grid'))
    return 0


def show_entry(entry_id: int, registry: RunRegistry) -> int:
    entry = registry.get_entry(entry_id)
    if entry is None:
        print(color_text(f"No invocation with ID {entry_id}.", 'red'))
        return 1
    print_header(f"Invocation {entry_id}: {entry['command']}")
    rows = [[key, value] for key, value in entry.items()
            if key not in ('outputs', 'details')]
    print(tabulate(rows, tablefmt='grid'))
    print_section("Outputs")
    for path in entry['outputs']:
        print(f"  {path}")
    if entry['details']:
        print_section("Details")
        print(tabulate(list(entry['details'].items()), tablefmt='grid'))
    return 0


def main(argv=None) -> int:
    """Main application entry point."""
    args = build_parser().parse_args(argv)
    log_config = load_config()['logging']
    setup_logging(args.log_level or log_config['level'], log_config['dir'], log_config['prefix'])
    logger.info(f"Starting contract lab: {args.command}")

    try:
        registry = RunRegistry(args.registry_dir)
        if args.command in EXPERIMENT_COMMANDS:
            return run_experiment(args, registry)
        if args.command == 'census':
            return run_census(args, registry)
        if args.command == 'verify':
            return run_verify(args, registry)
        return show_history(args, registry)
    except KeyboardInterrupt:
        print("\n\n" + color_text("Program interrupted by user.", 'yellow'))
        logger.info("Program interrupted by user")
        return 130
    except Exception as e:
        logger.exception("An unhandled error occurred")
        print(color_text(f"\nAn error occurred: {str(e)}", 'red'))
        return 1


if __name__ == "__main__":
    sys.exit(main())
