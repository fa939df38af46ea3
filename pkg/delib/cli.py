#!/usr/bin/env python3
"""
Delib CLI — Command-Line Interface for the Simulator
======================================================

Usage:
  delib run [--config FILE] [--set key=value ...]   Run an experiment
  delib validate --config FILE                       Check a config file
  delib report <records.csv>                         Print the result tables
  delib plot <records.csv> <figure> [-o out.svg]     Write an SVG figure
  delib demo [--seed N]                              Narrate one replication

Exit codes: 0 success, 1 runtime failure, 2 bad config or input.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from delib import __version__
from delib.config import ConfigError, ExperimentConfig, apply_overrides, load_config
from delib.harness import run_experiment, run_replication
from delib.plotting import FIGURES, UnknownFigureError, plot_figure
from delib.records import RecordFormatError, load_records
from delib.report import EmptyRecordsError, render_report
from delib.types import INITIAL, STRATEGY_LABELS, DelibError, RuleName, Strategy

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_INPUT = 2

_BAD_INPUT = (ConfigError, RecordFormatError, UnknownFigureError, EmptyRecordsError,
              FileNotFoundError)


# ── ANSI Colors ──────────────────────────────────────────────
class C:
    BOLD = "\033[1m"
    GREEN = "\033[92m"
    CYAN = "\033[96m"
    YELLOW = "\033[93m"
    RED = "\033[91m"
    RESET = "\033[0m"
    DIM = "\033[2m"


def _fail(label: str, err: Exception) -> int:
    code = EXIT_BAD_INPUT if isinstance(err, _BAD_INPUT) else EXIT_FAILURE
    print(f"{C.RED}✗ {label}:{C.RESET} {err}", file=sys.stderr)
    return code


def _setup_logging(verbosity: int):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# ── Config resolution ────────────────────────────────────────

def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = list(getattr(args, "overrides", None) or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"master_seed={args.seed}")
    if getattr(args, "replications", None) is not None:
        overrides.append(f"replications={args.replications}")
    if getattr(args, "threads", None) is not None:
        overrides.append(f"threads={args.threads}")
    if getattr(args, "strategies", None):
        overrides.append(f"strategies=[{args.strategies}]")
    if getattr(args, "rules", None):
        overrides.append(f"rules=[{args.rules}]")
    cfg = apply_overrides(cfg, overrides)
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _describe(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                lines.append(f"  {C.YELLOW}{key}.{sub}{C.RESET} = {sub_value!r}")
        else:
            lines.append(f"  {C.YELLOW}{key}{C.RESET} = {value!r}")
    return "\n".join(lines)


# ── Subcommands ──────────────────────────────────────────────

def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args)
    except ConfigError as err:
        return _fail("Config Error", err)
    print(f"{C.CYAN}▶ {cfg.replications} replications × {len(cfg.strategies)} strategies × "
          f"{len(cfg.rules)} rules (seed {cfg.master_seed}, {cfg.threads} worker(s)){C.RESET}")
    try:
        result = run_experiment(cfg)
    except (DelibError, OSError) as err:
        return _fail("Run Error", err)
    print(f"{C.GREEN}✓ {len(result.records)} records → {result.records_path}{C.RESET}")
    print(f"{C.GREEN}✓ report → {result.report_path}{C.RESET}")
    print(f"{C.DIM}  eligibility acceptance rate {result.report.acceptance_rate:.4f}{C.RESET}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = resolve_config(args)
    except ConfigError as err:
        return _fail("Config Error", err)
    print(f"{C.GREEN}✓ {args.config or '<defaults>'} is valid{C.RESET}")
    print(_describe(cfg))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        records = load_records(args.records)
        print(render_report(records), end="")
    except (DelibError, OSError) as err:
        return _fail("Report Error", err)
    return EXIT_OK


def cmd_plot(args) -> int:
    output = args.output or os.path.join(os.path.dirname(args.records), f"{args.figure}.svg")
    try:
        if args.figure not in FIGURES:
            raise UnknownFigureError(f"unknown figure '{args.figure}' (expected one of: {', '.join(FIGURES)})")
        plot_figure(load_records(args.records), args.figure, output)
    except (DelibError, OSError) as err:
        return _fail("Plot Error", err)
    print(f"{C.GREEN}✓ {args.figure} → {output}{C.RESET}")
    return EXIT_OK


def demo_transcript(seed: int) -> List[str]:
    """Narrate replication 0 at the default parameters."""
    cfg = ExperimentConfig(replications=1, master_seed=seed, strategies=list(Strategy),
                           rules=list(RuleName)).validate()
    records = run_replication(cfg, 0)
    baseline = {r.rule: r for r in records if r.strategy == INITIAL}
    lines = [f"{C.BOLD}Replication 0, seed {seed}{C.RESET}",
             f"eligible profile after {records[0].attempts} attempt(s)"]
    strategy = None
    for r in records:
        if r.strategy != strategy:
            strategy = r.strategy
            lines.append(f"\n{C.CYAN}{STRATEGY_LABELS[strategy]}{C.RESET}  "
                         f"variance {r.variance:.5f}  disagreement {r.disagreement:.4f}")
        base = baseline[r.rule]
        delta = "" if strategy == INITIAL else f"  ({r.uragg - base.uragg:+.4f})"
        lines.append(f"  {r.rule.upper():<4} {{{', '.join(map(str, r.committee))}}}  "
                     f"UR {r.ur:.4f}  RR {r.rr:.4f}  URagg {r.uragg:.4f}{delta}  "
                     f"EJR {'✓' if r.ejr else '✗'}  PJR {'✓' if r.pjr else '✗'}  "
                     f"minority {r.minority_preserved}")
    return lines


def cmd_demo(args) -> int:
    try:
        print("\n".join(demo_transcript(args.seed)))
    except (DelibError, OSError) as err:
        return _fail("Demo Error", err)
    return EXIT_OK


# ── Parser ───────────────────────────────────────────────────

def _add_config_flags(p: argparse.ArgumentParser, required: bool = False):
    p.add_argument("--config", "-c", required=required, help="Experiment config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="Override a config value (repeatable)")
    p.add_argument("--seed", type=int, help="Master seed")
    p.add_argument("--replications", "-n", type=int, help="Number of replications")
    p.add_argument("--strategies", help="Comma-separated strategies")
    p.add_argument("--rules", help="Comma-separated rules (av, cc, pav, mes)")
    p.add_argument("--threads", "-j", type=int, help="Worker processes")
    p.add_argument("--out", "-o", help="Output directory (default: $DELIB_OUT_DIR or ./results)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delib",
        description="Deliberation and multi-winner voting simulator",
    )
    parser.add_argument("--version", action="version", version=f"delib {__version__}")
    parser.add_argument("--verbose", "-v", action="count", default=0,
                        help="Log progress (-v) or debug detail (-vv)")
    sub = parser.add_subparsers(dest="command")

    # delib run
    run_p = sub.add_parser("run", help="Run an experiment and write records + report")
    _add_config_flags(run_p)

    # delib validate
    val_p = sub.add_parser("validate", help="Parse and validate a config file")
    _add_config_flags(val_p, required=True)

    # delib report
    rep_p = sub.add_parser("report", help="Print result tables from a records file")
    rep_p.add_argument("records", help="Path to records.csv")

    # delib plot
    plot_p = sub.add_parser("plot", help="Write an SVG figure from a records file")
    plot_p.add_argument("records", help="Path to records.csv")
    plot_p.add_argument("figure", help=f"One of: {', '.join(FIGURES)}")
    plot_p.add_argument("--output", "-o", default=None,
                        help="SVG path (default: <figure>.svg next to the records)")

    # delib demo
    demo_p = sub.add_parser("demo", help="Narrate one replication at the default parameters")
    demo_p.add_argument("--seed", type=int, default=ExperimentConfig().master_seed, help="Master seed")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    commands = {
        "run": cmd_run,
        "validate": cmd_validate,
        "report": cmd_report,
        "plot": cmd_plot,
        "demo": cmd_demo,
    }
    command = commands.get(args.command)
    if command is None:
        parser.print_help()
        return EXIT_BAD_INPUT
    return command(args)


if __name__ == "__main__":
    sys.exit(main())
