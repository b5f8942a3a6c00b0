"""Desk-scale acceptance criteria, one test each.

Every test records its measurements; ``conftest.py`` prints one PASS/FAIL
line per criterion in the terminal summary. The whole module takes several
minutes on one core, mostly criterion 7.
"""
import math
import time

import mpmath
import numpy as np
import pytest
from benchmark_oracles import LISTED_OPTIMA, oracle_value, relative_error

from aphbo.acquisition import acq_ei, acq_pi
from aphbo.benchmarks import add_synthetic_constrained, builtin_problems, get_problem
from aphbo.gp import KernelFamily, KernelSpec, gp_fit, log_marginal_likelihood
from aphbo.hedge import inverse_cdf_sample, softmax_pmf
from aphbo.scheduler import BatchConfig, Scheduler, SchedulerConfig, SchedulerMode, Status, run
from aphbo.verify import replay_invariants

pytestmark = pytest.mark.acceptance

SEEDS = range(5)
HEDGE = SchedulerMode.async_hedge()
UCB = SchedulerMode.async_single("UCB")
MC = SchedulerMode.random_search()


def default_config(problem):
    return SchedulerConfig(batch=BatchConfig(*problem.default_batch))


# ---------------------------------------------------------------- criterion 1
def _k(a, b, family, signal, scales, mp=False):
    m = mpmath if mp else math
    f = mpmath.mpf if mp else float
    r2 = sum(((f(x) - f(y)) / f(s)) ** 2 for x, y, s in zip(a, b, scales))
    r = m.sqrt(r2)
    if family is KernelFamily.MATERN12:
        return f(signal) * m.exp(-r)
    if family is KernelFamily.MATERN32:
        return f(signal) * (1 + m.sqrt(3) * r) * m.exp(-m.sqrt(3) * r)
    if family is KernelFamily.MATERN52:
        return f(signal) * (1 + m.sqrt(5) * r + 5 * r2 / 3) * m.exp(-m.sqrt(5) * r)
    return f(signal) * m.exp(-r2 / 2)


def _dense_oracle(X, y, Xs, family, signal, scales, diag, mu0):
    """Posterior and LML from an explicit inverse and determinant in 50-digit arithmetic."""
    with mpmath.workdps(50):
        n = len(X)
        A = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                A[i, j] = _k(X[i], X[j], family, signal, scales, mp=True) + (diag if i == j else 0)
        Ainv = A ** -1
        r = mpmath.matrix([mpmath.mpf(v) - mu0 for v in y])
        w = Ainv * r
        means, variances = [], []
        for x in Xs:
            ks = mpmath.matrix([_k(a, x, family, signal, scales, mp=True) for a in X])
            means.append(float(mu0 + (ks.T * w)[0]))
            variances.append(max(float(signal - (ks.T * Ainv * ks)[0]), 0.0))
        lml = -0.5 * (r.T * w)[0] - 0.5 * mpmath.log(mpmath.det(A)) - 0.5 * n * mpmath.log(2 * mpmath.pi)
        return np.array(means), np.array(variances), float(lml)


def test_c1_gp_oracle_equivalence(detail):
    rng = np.random.default_rng(101)
    families = list(KernelFamily)
    worst, worst_cond, elapsed = 0.0, 0.0, 0.0
    for i in range(50):
        family = families[i % 4]
        n, d = int(rng.integers(1, 21)), int(rng.integers(1, 6))
        X, Xs = rng.random((n, d)), rng.random((7, d))
        signal = float(rng.uniform(0.2, 5))
        scales = rng.uniform(0.1, 1.0, d)
        # a nugget keeps the systems well posed; noise-free Matern/SE
        # matrices at n = 20 can be singular to working precision
        noise = signal * 10 ** rng.uniform(-4, -1)
        spec = KernelSpec(family, signal, tuple(scales))
        # outputs are a draw from the model itself
        K = np.array([[_k(a, b, family, signal, scales) for b in X] for a in X]) + noise * np.eye(n)
        y = rng.normal(0, 3) + np.linalg.cholesky(K) @ rng.standard_normal(n)
        mu0 = float(y.mean())

        t0 = time.perf_counter()
        model = gp_fit(X, y, spec, noise, mu0)
        mean, var = model.predict(Xs)
        lml = log_marginal_likelihood(model)
        elapsed += time.perf_counter() - t0

        o_mean, o_var, o_lml = _dense_oracle(X, y, Xs, family, signal, scales, noise + model.jitter, mu0)
        worst = max(worst, np.max(np.abs(mean - o_mean)), np.max(np.abs(var - o_var)), abs(lml - o_lml))
        worst_cond = max(worst_cond, np.linalg.cond(K))
    detail(f"max deviation {worst:.2e} (tol 1e-8), max cond {worst_cond:.1e}, GP time {elapsed:.3f} s (limit 10 s)")
    assert worst <= 1e-8
    assert elapsed < 10.0


# ---------------------------------------------------------------- criterion 2
def _phi(g):
    return math.exp(-g * g / 2) / math.sqrt(2 * math.pi)


def _Phi(g):
    return 0.5 * math.erfc(-g / math.sqrt(2))


def test_c2_acquisition_monte_carlo(detail):
    rng = np.random.default_rng(202)
    n = 1_000_000
    worst_z, beyond = 0.0, 0
    done = 0
    while done < 100:
        mu, sd, fb = rng.normal(), rng.uniform(0.05, 3), rng.normal()
        g = (mu - fb) / sd
        # a standard-error band presumes a near-normal sample mean, which
        # needs a fair number of draws on each side of f_best; the far
        # tails are covered by the closed-form unit tests instead
        if n * min(_Phi(g), _Phi(-g)) < 100:
            continue
        done += 1
        y = rng.normal(mu, sd, n)
        # exact standard errors of the n-sample means, from the closed-form
        # moments of 1{Y > f} and max(Y - f, 0)
        p = _Phi(g)
        ei = sd * (g * _Phi(g) + _phi(g))
        second = sd * sd * ((g * g + 1) * _Phi(g) + g * _phi(g))
        se_pi = math.sqrt(p * (1 - p) / n)
        se_ei = math.sqrt(max(second - ei * ei, 0.0) / n)
        for value, sample, se in ((acq_pi(mu, sd, fb), y > fb, se_pi),
                                  (acq_ei(mu, sd, fb), np.maximum(y - fb, 0), se_ei)):
            err = abs(value - sample.mean())
            z = err / se if se > 0 else (0.0 if err == 0 else math.inf)
            worst_z = max(worst_z, z)
            beyond += z > 3
    ei_zero = all(acq_ei(m, 0.0, 0.3) == 0.0 for m in (-1.0, 0.3, 2.0))
    # an exact implementation still lands outside 3 SE with probability 0.0027
    # per comparison, i.e. 0.54 times in 200 on average
    detail(f"worst |error| = {worst_z:.2f} SE over 200 comparisons (limit 3), {beyond} beyond 3 SE "
           f"(0.54 expected by chance); EI(sigma=0) == 0: {ei_zero}")
    assert worst_z <= 3.0
    assert ei_zero


# ---------------------------------------------------------------- criterion 3
def test_c3_hedge(detail):
    rng = np.random.default_rng(303)
    worst_sum = 0.0
    for _ in range(1000):
        gains = rng.exponential(5, 3) * (rng.random(3) < 0.8)
        worst_sum = max(worst_sum, abs(softmax_pmf(gains, rng.uniform(0.01, 5)).sum() - 1))
    p = softmax_pmf([1.0, 0.0, 0.0], 1.0)
    dev = np.max(np.abs(p - [0.57612, 0.21194, 0.21194]))
    fixed = np.array([0.5, 0.3, 0.2])
    draws = np.bincount([inverse_cdf_sample(fixed, rng) for _ in range(100_000)], minlength=3) / 100_000
    freq_dev = np.max(np.abs(draws - fixed))
    detail(f"max |sum - 1| {worst_sum:.1e}; pmf(1,0,0; eta 1) = {np.round(p, 5).tolist()} "
           f"(dev {dev:.1e}); draw frequencies {draws.tolist()} (dev {freq_dev:.4f})")
    assert worst_sum <= 1e-12
    assert dev <= 1e-5
    assert freq_dev <= 0.01


# ---------------------------------------------------------------- criterion 4
def test_c4_benchmark_fidelity(detail):
    catalog = builtin_problems()
    worst_rel, worst_opt = 0.0, 0.0
    for name, problem in catalog.items():
        rng = np.random.default_rng(sum(map(ord, name)) + 404)
        X = problem.lower + (problem.upper - problem.lower) * rng.random((100, problem.dimension))
        for got, x in zip(problem(X), X):
            worst_rel = max(worst_rel, relative_error(got, oracle_value(name, x)))
    for name, (f_star, x_star) in LISTED_OPTIMA.items():
        worst_opt = max(worst_opt, abs(catalog[name](np.array([x_star]))[0] - f_star))
    detail(f"{len(catalog)} functions, worst relative error {worst_rel:.1e} (tol 1e-9); "
           f"{len(LISTED_OPTIMA)} listed optima, worst gap {worst_opt:.1e} (tol 1e-3)")
    assert len(catalog) == 16
    assert worst_rel <= 1e-9
    assert worst_opt <= 1e-3


# ---------------------------------------------------------------- criterion 5
def test_c5_scheduler_invariants(detail):
    problem = add_synthetic_constrained(get_problem("camel6"), (0.0, 0.0), 1.0)
    modes = [HEDGE, UCB, SchedulerMode.async_single("EI"), SchedulerMode.sync_batch("EI"), MC]
    violations = []
    n_dispatch = 0
    for seed in range(20):
        mode = modes[seed % len(modes)]
        batch = BatchConfig(2, 1, 1) if seed % 2 == 0 else BatchConfig(3, 2, 0)
        result = run(problem, SchedulerConfig(batch=batch), mode, max_evaluations=24, seed=seed)
        events = result.log.events
        n_dispatch += len(result.log.of("dispatch"))
        violations += [f"seed {seed}: {v}" for v in replay_invariants(events)]
        trace = [e["best_so_far"] for e in events if e["event"] == "complete" and e["best_so_far"] is not None]
        if any(b < a for a, b in zip(trace, trace[1:])):
            violations.append(f"seed {seed}: best-so-far decreased")
    # the replay must catch a forged over-budget dispatch
    forged = [dict(e) for e in events]
    first = next(i for i, e in enumerate(forged) if e["event"] == "complete")
    template = next(e for e in forged if e["event"] == "dispatch")
    extra = [dict(template, id=10_000 + k) for k in range(6)]
    caught = bool(replay_invariants(forged[:first] + extra + forged[first:]))
    detail(f"20 runs, {n_dispatch} dispatches replayed, {len(violations)} violations; forged log caught: {caught}")
    assert violations == []
    assert caught


# ---------------------------------------------------------------- criterion 6
def test_c6_async_dominance(detail):
    a = 0.03
    problem = get_problem("hartmann6").with_duration(a, 30 * a)
    config = SchedulerConfig(batch=BatchConfig(5, 5, 0))
    horizon = 4.0
    ratios = []
    for seed in SEEDS:
        counts = []
        for mode in (HEDGE, SchedulerMode.sync_batch("EI")):
            result = Scheduler(problem, config, mode, seed=seed).run(max_time=horizon)
            counts.append(result.completed_by(horizon))
        ratios.append(counts[0] / counts[1])
    detail(f"completed-by-{horizon:g}s ratio async/sync per seed {[round(r, 2) for r in ratios]} (need >= 1.3 each)")
    assert min(ratios) >= 1.3


# ---------------------------------------------------------------- criterion 7
def _medians(name, modes, n_evals):
    problem = get_problem(name)
    out = {}
    for mode in modes:
        best = [problem.report_sign * run(problem, default_config(problem), mode,
                                          max_evaluations=n_evals, seed=s).best_value for s in SEEDS]
        out[mode.name] = float(np.median(best))
    return out


def test_c7_optimization_quality(detail):
    failures = []
    notes = []
    camel6 = _medians("camel6", [HEDGE], 80)
    notes.append(f"camel6@80 aphBO {camel6['aphBO']:.4f} (<= -1.0)")
    if not camel6["aphBO"] <= -1.0:
        failures.append("camel6")
    for name, n_evals in (("eggholder", 80), ("hartmann3", 150), ("hartmann6", 200)):
        med = _medians(name, [HEDGE, UCB, MC], n_evals)
        notes.append(f"{name}@{n_evals} " + " ".join(f"{k} {v:.4f}" for k, v in med.items()))
        for mode in ("aphBO", "apBO-UCB"):
            if not med[mode] < med["MC"]:
                failures.append(f"{name} {mode}")
        if name == "hartmann3":
            notes[-1] += " (aphBO <= -3.5)"
            if not med["aphBO"] <= -3.5:
                failures.append("hartmann3 level")
    detail("medians over 5 seeds: " + "; ".join(notes) + (f"; failing: {failures}" if failures else ""))
    assert failures == []


# ---------------------------------------------------------------- criterion 8
def test_c8_constrained_eggholder(detail):
    base = get_problem("eggholder")
    x_star = np.array(base.known_optimum[1])
    # the disk sits on the point reflection of the optimum and covers most
    # of that half of the domain; the optimum itself stays feasible
    problem = add_synthetic_constrained(base, -x_star, 700.0)
    held_out = base.lower + (base.upper - base.lower) * np.random.default_rng(12345).random((4000, 2))
    truth = problem.feasible(held_out)
    config = SchedulerConfig(batch=BatchConfig(2, 1, 1))
    accuracies, bad_best = [], 0
    for seed in SEEDS:
        sched = Scheduler(problem, config, HEDGE, seed=seed)
        result = sched.run(max_evaluations=60)
        feasible_y = {r.id: r.y for r in result.records if r.status is Status.FEASIBLE}
        for e in result.log.of("complete"):
            if e["best_so_far"] is None:
                continue
            owners = [i for i, y in feasible_y.items() if y == e["best_so_far"]]
            if not owners or not problem.feasible(result.records[owners[0]].x)[0]:
                bad_best += 1
        model = sched.models().feasibility
        scaled = (held_out - base.lower) / (base.upper - base.lower)
        accuracies.append(float(np.mean((model.prob_feasible(scaled) > 0.5) == truth)))
    detail(f"feasible fraction {truth.mean():.3f}; held-out accuracy per seed "
           f"{[round(a, 3) for a in accuracies]} (> 0.7); infeasible best-so-far reports {bad_best}")
    assert bad_best == 0
    assert min(accuracies) > 0.7


# ---------------------------------------------------------------- criterion 9
def test_c9_determinism(detail, tmp_path):
    problem = add_synthetic_constrained(get_problem("eggholder"), (-512.0, -404.2319), 700.0)
    config = SchedulerConfig(batch=BatchConfig(2, 1, 1))
    paths = [tmp_path / f"run{i}.jsonl" for i in range(2)]
    for path in paths:
        run(problem, config, HEDGE, max_evaluations=40, seed=42, log_path=path)
    a, b = (p.read_bytes() for p in paths)
    detail(f"two logs of {len(a)} bytes, identical: {a == b}")
    assert a == b
