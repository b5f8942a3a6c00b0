"""Experiment configs, batch runs and plot-data export.

A config is a TOML file::

    problem = "hartmann3"                 # catalog name (required)
    modes = ["aphBO", "apBO-UCB", "pBO-EI", "MC"]
    repeats = 5                           # seeds master_seed + 0 .. repeats - 1
    master_seed = 0

    [batch]                               # defaults to the catalog batch
    acquisition = 3
    explore = 3
    classif = 0

    [stop]                                # defaults to the catalog max iteration
    max_evaluations = 150
    max_time = 60.0                       # simulated seconds, optional

    [duration]                            # evaluation time ~ U(low, high)
    low = 0.03
    high = 0.9

    [model]
    kernel = "Matern52"
    hyper_every = 5
    ucb_delta = 0.1
    cutoff = 0.5                          # evaluations longer than this fail

    [[unknown_constraint]]                # optional infeasible disks
    center = [0.0, 0.0]
    radius = 100.0
"""
from __future__ import annotations

import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .benchmarks import add_synthetic_constrained, builtin_problems
from .gp import KernelFamily
from .runlog import RunLog, best_trace
from .scheduler import BatchConfig, SchedulerConfig, SchedulerMode, run

SUMMARY_COLUMNS = (
    "problem", "mode", "seed", "evaluations_completed", "best_feasible", "wall_clock_simulated_s",
)

_SCHEMA = {
    "": {"problem", "modes", "repeats", "master_seed", "batch", "stop", "duration", "model",
         "unknown_constraint"},
    "batch": {"acquisition", "explore", "classif"},
    "stop": {"max_evaluations", "max_time"},
    "duration": {"low", "high"},
    "model": {"kernel", "hyper_every", "ucb_delta", "cutoff"},
    "unknown_constraint": {"center", "radius"},
}


class ConfigError(ValueError):
    """Invalid experiment config; ``keys`` lists the offending entries."""

    def __init__(self, problems):
        self.keys = sorted(problems)
        super().__init__("invalid config: " + "; ".join(f"{k}: {problems[k]}" for k in self.keys))


@dataclass(frozen=True)
class Experiment:
    problem: object
    modes: tuple
    repeats: int
    master_seed: int
    scheduler: SchedulerConfig
    max_evaluations: int | None
    max_time: float | None

    def seeds(self):
        return [self.master_seed + i for i in range(self.repeats)]


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_config(raw):
    """Validate a config mapping and build an :class:`Experiment`.

    Raises
    ------
    ConfigError
        Listing every unknown, missing or ill-typed key at once.
    """
    bad = {}
    for key in set(raw) - _SCHEMA[""]:
        bad[key] = "unknown key"
    for section in ("batch", "stop", "duration", "model"):
        table = raw.get(section, {})
        if not isinstance(table, dict):
            bad[section] = "must be a table"
            continue
        for key in set(table) - _SCHEMA[section]:
            bad[f"{section}.{key}"] = "unknown key"

    catalog = builtin_problems()
    problem = None
    name = raw.get("problem")
    if name is None:
        bad["problem"] = "required"
    elif name not in catalog:
        bad["problem"] = f"unknown problem {name!r}"
    else:
        problem = catalog[name]

    modes = raw.get("modes", ["aphBO"])
    if isinstance(modes, str):
        modes = [modes]
    parsed_modes = []
    for m in modes if isinstance(modes, list) else []:
        try:
            parsed_modes.append(SchedulerMode.parse(m))
        except ValueError:
            bad["modes"] = f"unknown mode {m!r}"
    if not isinstance(modes, list) or not modes:
        bad["modes"] = "must be a nonempty list"

    repeats = raw.get("repeats", 5)
    if not _is_int(repeats) or repeats < 1:
        bad["repeats"] = "must be a positive integer"
    seed = raw.get("master_seed", 0)
    if not _is_int(seed) or seed < 0:
        bad["master_seed"] = "must be a nonnegative integer"

    batch = raw.get("batch", {}) if isinstance(raw.get("batch", {}), dict) else {}
    default = problem.default_batch if problem is not None else (1, 0, 0)
    sizes = []
    for key, d in zip(("acquisition", "explore", "classif"), default):
        v = batch.get(key, d)
        if not _is_int(v) or v < 0 or (key == "acquisition" and v < 1):
            bad[f"batch.{key}"] = "must be a nonnegative integer (acquisition at least 1)"
        sizes.append(v)

    stop = raw.get("stop", {}) if isinstance(raw.get("stop", {}), dict) else {}
    max_evals = stop.get("max_evaluations")
    max_time = stop.get("max_time")
    if max_evals is not None and (not _is_int(max_evals) or max_evals < 1):
        bad["stop.max_evaluations"] = "must be a positive integer"
    if max_time is not None and (not _is_num(max_time) or max_time <= 0):
        bad["stop.max_time"] = "must be a positive number"
    if max_evals is None and max_time is None and problem is not None:
        max_evals = problem.max_evaluations

    duration = raw.get("duration", {}) if isinstance(raw.get("duration", {}), dict) else {}
    low, high = duration.get("low"), duration.get("high")
    for key, v in (("low", low), ("high", high)):
        if v is not None and (not _is_num(v) or v < 0):
            bad[f"duration.{key}"] = "must be a nonnegative number"
    if _is_num(low) and _is_num(high) and low > high:
        bad["duration.low"] = "must not exceed duration.high"

    model = raw.get("model", {}) if isinstance(raw.get("model", {}), dict) else {}
    kernel = model.get("kernel", KernelFamily.MATERN52.value)
    try:
        kernel = KernelFamily(kernel)
    except ValueError:
        bad["model.kernel"] = f"one of {[k.value for k in KernelFamily]}"
    hyper_every = model.get("hyper_every", 5)
    if not _is_int(hyper_every) or hyper_every < 1:
        bad["model.hyper_every"] = "must be a positive integer"
    ucb_delta = model.get("ucb_delta", 0.1)
    if not _is_num(ucb_delta) or not 0 < ucb_delta < 1:
        bad["model.ucb_delta"] = "must lie in (0, 1)"
    cutoff = model.get("cutoff")
    if cutoff is not None and (not _is_num(cutoff) or cutoff <= 0):
        bad["model.cutoff"] = "must be a positive number"

    disks = raw.get("unknown_constraint", [])
    if not isinstance(disks, list):
        bad["unknown_constraint"] = "must be an array of tables"
        disks = []
    for i, disk in enumerate(disks):
        key = f"unknown_constraint[{i}]"
        if not isinstance(disk, dict):
            bad[key] = "must be a table"
            continue
        for extra in set(disk) - _SCHEMA["unknown_constraint"]:
            bad[f"{key}.{extra}"] = "unknown key"
        center = disk.get("center")
        if (not isinstance(center, list) or not all(_is_num(c) for c in center)
                or (problem is not None and len(center) != problem.dimension)):
            bad[f"{key}.center"] = "must be a list of numbers, one per dimension"
        if not _is_num(disk.get("radius")) or disk.get("radius") <= 0:
            bad[f"{key}.radius"] = "must be a positive number"

    if bad:
        raise ConfigError(bad)

    if low is not None or high is not None:
        lo = low if low is not None else problem.duration[0]
        hi = high if high is not None else max(problem.duration[1], lo)
        problem = problem.with_duration(lo, hi)
    for disk in disks:
        problem = add_synthetic_constrained(problem, disk["center"], disk["radius"])
    cfg = SchedulerConfig(
        batch=BatchConfig(*sizes), kernel=kernel, hyper_every=hyper_every,
        ucb_delta=float(ucb_delta), cutoff=None if cutoff is None else float(cutoff),
    )
    return Experiment(problem, tuple(parsed_modes), repeats, seed, cfg, max_evals,
                      None if max_time is None else float(max_time))


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError({"<file>": str(exc)}) from None
    return parse_config(raw)


def log_name(problem, mode, seed):
    return f"{problem}__{mode}__seed{seed}.jsonl"


def _one_run(job):
    experiment, mode, seed, log_path = job
    result = run(experiment.problem, experiment.scheduler, mode,
                 max_evaluations=experiment.max_evaluations, max_time=experiment.max_time,
                 seed=seed, log_path=log_path)
    sign = experiment.problem.report_sign
    best = None if result.best_value is None else sign * result.best_value
    return {
        "problem": experiment.problem.name,
        "mode": mode.name,
        "seed": seed,
        "evaluations_completed": result.evaluations_completed,
        "best_feasible": best,
        "wall_clock_simulated_s": result.clock,
    }


def run_experiment(experiment, out_dir, jobs=None):
    """Run every mode x seed, write one log per run plus ``summary.csv``.

    Runs are independent and execute in up to ``jobs`` processes (default:
    the host core count). Rows are ordered by mode then seed regardless of
    completion order. Returns the summary rows.
    """
    if not isinstance(experiment, Experiment):
        experiment = load_config(experiment)
    out = Path(out_dir)
    (out / "logs").mkdir(parents=True, exist_ok=True)
    work = [
        (experiment, mode, seed, out / "logs" / log_name(experiment.problem.name, mode.name, seed))
        for mode in experiment.modes
        for seed in experiment.seeds()
    ]
    jobs = jobs or os.cpu_count() or 1
    if jobs == 1 or len(work) == 1:
        rows = [_one_run(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as pool:
            rows = list(pool.map(_one_run, work))
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    return rows


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: "" if row.get(k) is None else row[k] for k in columns})


def _run_label(events, path):
    start = next((e for e in events if e["event"] == "run_start"), None)
    if start is None:
        raise ValueError(f"{path}: no run_start event")
    return start, {"run": Path(path).stem, "problem": start["problem"], "mode": start["mode"],
                   "seed": start["seed"]}


def export_plot_data(log_paths, out_dir):
    """Turn run logs into one CSV per figure family; returns the written paths.

    * ``convergence_by_time.csv``: best feasible value after each completion vs time
    * ``convergence_by_iteration.csv``: the same against the completion count
    * ``portfolio.csv``: hedge p.m.f. and gains at each draw
    * ``occupancy.csv``: one interval per evaluation and worker

    Values are reported in the problem's own sense (minimization for the
    catalog).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_time, by_iter, portfolio, occupancy = [], [], [], []
    for path in log_paths:
        events = RunLog.load(path).events
        start, label = _run_label(events, path)
        sign = start.get("report_sign", 1.0)
        for t, count, best in best_trace(events):
            value = None if best is None else sign * best
            by_time.append({**label, "time": t, "best": value})
            by_iter.append({**label, "iteration": count, "best": value})
        for e in events:
            if e["event"] == "hedge_draw":
                portfolio.append({
                    **label, "time": e["t"], "id": e["id"], "n": e["n"], "eta": e["eta"],
                    "chosen": e["chosen"],
                    "p_PI": e["pmf"][0], "p_EI": e["pmf"][1], "p_UCB": e["pmf"][2],
                    "gain_PI": e["gains"][0], "gain_EI": e["gains"][1], "gain_UCB": e["gains"][2],
                })
        dispatched = {e["id"]: e for e in events if e["event"] == "dispatch"}
        for e in events:
            if e["event"] == "complete":
                d = dispatched[e["id"]]
                occupancy.append({
                    **label, "worker": d["worker"], "id": e["id"], "batch": d["batch"],
                    "acquisition": d["acquisition"], "start": d["t"], "end": e["t"],
                    "status": e["status"],
                })
    base = ["run", "problem", "mode", "seed"]
    files = {
        "convergence_by_time.csv": (base + ["time", "best"], by_time),
        "convergence_by_iteration.csv": (base + ["iteration", "best"], by_iter),
        "portfolio.csv": (base + ["time", "id", "n", "eta", "chosen", "p_PI", "p_EI", "p_UCB",
                                  "gain_PI", "gain_EI", "gain_UCB"], portfolio),
        "occupancy.csv": (base + ["worker", "id", "batch", "acquisition", "start", "end", "status"],
                          occupancy),
    }
    written = []
    for name, (columns, rows) in files.items():
        write_csv(out / name, columns, rows)
        written.append(out / name)
    return written
