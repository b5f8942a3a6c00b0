"""Fast self-checks behind ``aphbo verify``, plus the run-log invariant replay."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .acquisition import acq_ei, acq_pi
from .benchmarks import builtin_problems
from .gp import KernelFamily, KernelSpec, gp_fit, kernel_matrix, log_marginal_likelihood
from .hedge import softmax_pmf
from .scheduler import BatchConfig, SchedulerConfig, SchedulerMode, run

PRIORITY = ("acquisition", "explore", "explore_classif")


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def replay_invariants(events):
    """Replay a run log and list every violated scheduler invariant.

    Checks budget safety, batch priority at each model-driven dispatch,
    monotone best-so-far over feasible completions and that no refit
    hallucinates a point that has already completed.
    """
    start = next(e for e in events if e["event"] == "run_start")
    sizes = dict(zip(PRIORITY, start["batch"]))
    budget = start["budget"]
    sync = start["mode"].startswith("pBO")
    problems = []
    in_flight = {}
    done = set()
    infeasible_seen = False
    best = None
    for e in events:
        kind = e["event"]
        if kind == "dispatch":
            if len(in_flight) >= budget:
                problems.append(f"dispatch {e['id']}: budget {budget} exceeded")
            counts = {b: sum(1 for v in in_flight.values() if v == b) for b in PRIORITY}
            batch = e["batch"]
            if batch in PRIORITY:
                if counts[batch] >= sizes[batch]:
                    problems.append(f"dispatch {e['id']}: batch {batch} already full")
                if not sync:
                    expected = next(
                        (b for b in PRIORITY
                         if counts[b] < sizes[b] and (b != "explore_classif" or infeasible_seen)),
                        None,
                    )
                    if batch != expected:
                        problems.append(f"dispatch {e['id']}: chose {batch}, priority says {expected}")
            if (e["acquisition"] is not None) != (batch == "acquisition"):
                problems.append(f"dispatch {e['id']}: acquisition tag mismatch")
            in_flight[e["id"]] = batch
        elif kind == "complete":
            in_flight.pop(e["id"], None)
            done.add(e["id"])
            if e["status"] == "infeasible":
                infeasible_seen = True
                if e["y"] is not None:
                    problems.append(f"complete {e['id']}: infeasible with a value")
            elif e["y"] is None or not math.isfinite(e["y"]):
                problems.append(f"complete {e['id']}: feasible without a finite value")
            if e["status"] == "feasible" and (best is None or e["y"] > best):
                best = e["y"]
            if e["best_so_far"] != best:
                problems.append(f"complete {e['id']}: best_so_far {e['best_so_far']} != {best}")
        elif kind == "refit":
            stale = done.intersection(e["hallucinated_ids"])
            if stale:
                problems.append(f"refit {e['refit']}: hallucinates completed {sorted(stale)}")
            if set(e["hallucinated_ids"]) != set(in_flight) and e["n_feasible"] > 0:
                problems.append(f"refit {e['refit']}: hallucinated set differs from pending set")
    return problems


def _check_gp(rng):
    worst = 0.0
    for family in KernelFamily:
        for _ in range(3):
            n, d = int(rng.integers(1, 12)), int(rng.integers(1, 4))
            X, y = rng.random((n, d)), rng.standard_normal(n)
            spec = KernelSpec(family, float(rng.uniform(0.5, 2)), rng.uniform(0.3, 2, d))
            model = gp_fit(X, y, spec, noise_variance=0.01)
            Kinv = np.linalg.inv(kernel_matrix(X, X, spec) + (0.01 + model.jitter) * np.eye(n))
            Xs = rng.random((5, d))
            Ks = kernel_matrix(X, Xs, spec)
            mean = model.prior_mean + Ks.T @ Kinv @ (y - model.prior_mean)
            var = spec.signal_variance - np.einsum("ij,ik,kj->j", Ks, Kinv, Ks)
            m, v = model.predict(Xs)
            r = y - model.prior_mean
            sign, logdet = np.linalg.slogdet(np.linalg.inv(Kinv))
            lml = -0.5 * r @ Kinv @ r - 0.5 * logdet - 0.5 * n * math.log(2 * math.pi)
            worst = max(worst, np.max(np.abs(m - mean)), np.max(np.abs(v - var)),
                        abs(log_marginal_likelihood(model) - lml))
    return Check("gp oracle", worst < 1e-8, f"max deviation {worst:.2e}")


def _check_acquisition(rng):
    bad = 0
    for _ in range(20):
        mu, sd, fb = rng.normal(), rng.uniform(0.1, 2), rng.normal()
        y = rng.normal(mu, sd, 100_000)
        gain = np.maximum(y - fb, 0)
        n = y.size
        # standard errors never drop below one sample's resolution, which
        # matters when no sample (or every sample) clears f_best
        if abs(acq_ei(mu, sd, fb) - gain.mean()) > 4 * max(gain.std() / math.sqrt(n), sd / n):
            bad += 1
        hit = y > fb
        if abs(acq_pi(mu, sd, fb) - hit.mean()) > 4 * max(hit.std() / math.sqrt(n), 1 / n):
            bad += 1
    ok = bad == 0 and acq_ei(1.0, 0.0, 0.0) == 0.0 and abs(acq_pi(1.0, 1.0, 0.0) - ndtr(1.0)) < 1e-15
    return Check("acquisition monte carlo", ok, f"{bad} of 40 outside 4 standard errors")


def _check_hedge():
    p = softmax_pmf(np.array([1.0, 0.0, 0.0]), 1.0)
    expected = np.array([0.57612, 0.21194, 0.21194])
    ok = abs(p.sum() - 1) < 1e-12 and np.max(np.abs(p - expected)) < 1e-5
    return Check("hedge pmf", ok, f"pmf {np.round(p, 5).tolist()}")


def _check_benchmarks():
    worst, name = 0.0, ""
    for problem in builtin_problems().values():
        if problem.known_optimum is None:
            continue
        f_star, x_star = problem.known_optimum
        err = abs(float(problem(np.array(x_star))[0]) - f_star)
        if err > worst:
            worst, name = err, problem.name
    return Check("benchmark optima", worst < 1e-3, f"worst {name} off by {worst:.2e}")


def _check_scheduler():
    problem = builtin_problems()["camel3"]
    config = SchedulerConfig(batch=BatchConfig(2, 2, 0))
    logs = []
    problems = []
    for mode in (SchedulerMode.async_hedge(), SchedulerMode.sync_batch("EI"),
                 SchedulerMode.random_search()):
        result = run(problem, config, mode, max_evaluations=20, seed=7)
        problems += replay_invariants(result.log.events)
        if mode.kind.value == "aphBO":
            logs.append(result.log.dumps())
    again = run(problem, config, SchedulerMode.async_hedge(), max_evaluations=20, seed=7)
    same = again.log.dumps() == logs[0]
    detail = "; ".join(problems[:3]) or "clean replay"
    yield Check("scheduler invariants", not problems, detail)
    yield Check("determinism", same, "identical logs" if same else "logs differ")


def run_checks(seed=0):
    rng = np.random.default_rng(seed)
    checks = [_check_gp(rng), _check_acquisition(rng), _check_hedge(), _check_benchmarks()]
    checks.extend(_check_scheduler())
    return checks
