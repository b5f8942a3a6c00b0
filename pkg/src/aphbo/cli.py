"""Command line entry point: ``aphbo run | catalog | export | verify``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .benchmarks import builtin_problems
from .experiment import ConfigError, export_plot_data, load_config, run_experiment
from .scheduler import SchedulerMode
from .verify import run_checks


def _cmd_run(args):
    try:
        experiment = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    changes = {}
    if args.mode:
        try:
            changes["modes"] = tuple(SchedulerMode.parse(m) for m in args.mode)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.repeats is not None:
        changes["repeats"] = args.repeats
    experiment = dataclasses.replace(experiment, **changes)
    rows = run_experiment(experiment, args.out_dir, jobs=args.jobs)
    for row in rows:
        print(f"{row['problem']:<12} {row['mode']:<9} seed {row['seed']:<4} "
              f"evals {row['evaluations_completed']:<4} best {row['best_feasible']} "
              f"t {row['wall_clock_simulated_s']:.3f}")
    print(f"wrote {Path(args.out_dir) / 'summary.csv'}")
    return 0


def _cmd_catalog(args):
    print(f"{'name':<12} {'d':>3}  {'batch':<10} {'max iter':>8}  {'optimum':>12}  domain")
    for p in builtin_problems().values():
        lo, hi = p.lower, p.upper
        domain = f"[{lo[0]:g}, {hi[0]:g}]^{p.dimension}" if len(set(lo)) == 1 and len(set(hi)) == 1 else \
            " x ".join(f"[{a:g}, {b:g}]" for a, b in zip(lo, hi))
        opt = "-" if p.known_optimum is None else f"{p.known_optimum[0]:g}"
        batch = ",".join(map(str, p.default_batch))
        note = f"  ({p.notes})" if p.notes else ""
        print(f"{p.name:<12} {p.dimension:>3}  ({batch:<8}) {p.max_evaluations:>8}  {opt:>12}  {domain}{note}")
    return 0


def _cmd_export(args):
    paths = []
    for item in args.logs:
        item = Path(item)
        paths.extend(sorted(item.glob("*.jsonl")) if item.is_dir() else [item])
    if not paths:
        print("error: no run logs found", file=sys.stderr)
        return 2
    for path in export_plot_data(paths, args.out_dir):
        print(f"wrote {path}")
    return 0


def _cmd_verify(args):
    failed = 0
    for check in run_checks(args.seed):
        failed += not check.ok
        print(f"{'PASS' if check.ok else 'FAIL'}  {check.name}: {check.detail}")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="aphbo", description="Asynchronous parallel constrained BO.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log model warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config", help="TOML experiment file")
    p.add_argument("--mode", action="append", help="override modes (repeatable), e.g. aphBO, apBO-UCB, pBO-EI, MC")
    p.add_argument("--seed", type=int, help="override master_seed")
    p.add_argument("--repeats", type=int, help="override repeats")
    p.add_argument("--out-dir", default="runs", help="output directory (default: runs)")
    p.add_argument("--jobs", type=int, help="concurrent runs (default: core count)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("catalog", help="list the benchmark problems")
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("export", help="convert run logs to plot CSVs")
    p.add_argument("logs", nargs="+", help="log files or directories of *.jsonl")
    p.add_argument("--out-dir", default="plots", help="output directory (default: plots)")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("verify", help="run the built-in oracle and invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
