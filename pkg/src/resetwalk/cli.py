"""Command-line entry point: ``resetwalk run|validate|figure``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import FIGURES, ConfigError, load_config
from .experiments import run_experiment, run_figure
from .inversion import InversionError
from .model import ParameterError
from .simulate import CensoredSamplesError
from .validation import SUITES, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("resetwalk")


def _report(report) -> int:
    for note in report.notes:
        print(note)
    for path in report.files:
        print(f"wrote {path}")
    if report.censored_rows:
        print(f"error: {report.censored_rows} MFPT row(s) had censored paths", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _report(run_experiment(cfg, args.workers))


def cmd_figure(args) -> int:
    report = run_figure(args.name, Path(args.out), args.paths, args.seed, workers=args.workers)
    return _report(report)


def cmd_validate(args) -> int:
    checks = run_suite(args.suite, args.paths, args.fast, args.seed)
    for check in checks:
        print(check.line())
    failed = sum(c.counts_as_failure for c in checks)
    known = sum(c.known_failure for c in checks)
    counted = len(checks) - known
    summary = f"{args.suite}: {counted - failed}/{counted} checks passed"
    if known:
        summary += f"; {known} documented limitation(s) reported as XFAIL/XPASS"
    print(summary)
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resetwalk",
        description="Random walks with drift, jumps and direction-switching resets: "
        "closed forms, Laplace inversion and exact Monte Carlo.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    parser.add_argument("--workers", type=int, default=None, help="worker threads (default: all CPUs, capped by RESETWALK_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a TOML config")
    run.add_argument("config", help="path to the config file")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="run an invariant battery")
    val.add_argument("suite", choices=SUITES)
    val.add_argument("--paths", type=int, default=None, help="Monte Carlo paths per check (mc-vs-analytic only)")
    val.add_argument("--fast", action="store_true", help="10^4 paths with 5-stderr bands")
    val.add_argument("--seed", type=int, default=0)
    val.set_defaults(func=cmd_validate)

    fig = sub.add_parser("figure", help="MFPT curves (analytic and Monte Carlo) as CSV")
    fig.add_argument("name", choices=FIGURES)
    fig.add_argument("--paths", type=int, default=1_000_000, help="paths per grid point (default: %(default)s)")
    fig.add_argument("--seed", type=int, default=0)
    fig.add_argument("--out", default="figures", help="output directory (default: %(default)s)")
    fig.set_defaults(func=cmd_figure)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "paths", None) is not None and args.paths < 1:
        parser.error("--paths must be >= 1")
    try:
        return args.func(args)
    except (InversionError, CensoredSamplesError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
