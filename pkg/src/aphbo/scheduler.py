"""Asynchronous three-batch constrained BO engine.

The single scheduler loop owns every piece of mutable state: the evaluation
records, both GPs and the hedge portfolio. Evaluations run in an executor and
come back as completions. Models handed to the inner optimizer are immutable
snapshots.

All model work happens in the unit cube; problems are evaluated in their own
coordinates. The engine maximizes.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .acquisition import AcquisitionKind, UcbSchedule, evaluate_acquisition
from .cmaes import CmaEsConfig, maximize
from .executors import SimulatedExecutor, ThreadedExecutor
from .feasibility import DEFAULT_LABEL_NOISE, FeasibilityModel, fit_feasibility
from .gp import (
    KernelFamily,
    KernelSpec,
    NumericalError,
    fit_hyperparameters,
    gp_fit,
    merge_duplicates,
)
from .hedge import HedgeState, record_outcome, sample_acquisition
from .runlog import RunLog

log = logging.getLogger(__name__)


class Batch(str, enum.Enum):
    ACQUISITION = "acquisition"
    EXPLORE = "explore"
    EXPLORE_CLASSIF = "explore_classif"
    INITIAL = "initial"
    RANDOM = "random"


PRIORITY = (Batch.ACQUISITION, Batch.EXPLORE, Batch.EXPLORE_CLASSIF)


class Status(str, enum.Enum):
    PENDING = "pending"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


class NoFeasibleDataError(RuntimeError):
    pass


@dataclass
class EvaluationRecord:
    id: int
    x: np.ndarray
    u: np.ndarray
    batch: Batch
    acquisition: AcquisitionKind | None
    status: Status = Status.PENDING
    y: float | None = None
    dispatched_at: float = 0.0
    completed_at: float | None = None
    hallucinated_y: float | None = None
    worker: int = 0
    error: str | None = None

    @property
    def pending(self):
        return self.status is Status.PENDING


@dataclass(frozen=True)
class BatchConfig:
    acq_size: int = 1
    explore_size: int = 0
    classif_size: int = 0

    def __post_init__(self):
        if self.acq_size < 1:
            raise ValueError("acquisition batch needs at least one slot")
        if self.explore_size < 0 or self.classif_size < 0:
            raise ValueError("batch sizes must be nonnegative")

    @property
    def budget(self):
        return self.acq_size + self.explore_size + self.classif_size

    def size(self, batch):
        return {
            Batch.ACQUISITION: self.acq_size,
            Batch.EXPLORE: self.explore_size,
            Batch.EXPLORE_CLASSIF: self.classif_size,
        }[Batch(batch)]

    def as_tuple(self):
        return (self.acq_size, self.explore_size, self.classif_size)


class ModeKind(str, enum.Enum):
    ASYNC_HEDGE = "aphBO"
    ASYNC_SINGLE = "apBO"
    SYNC_BATCH = "pBO"
    RANDOM = "MC"


@dataclass(frozen=True)
class SchedulerMode:
    kind: ModeKind
    acquisition: AcquisitionKind | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        if self.acquisition is not None:
            object.__setattr__(self, "acquisition", AcquisitionKind(self.acquisition))
        needs = self.kind in (ModeKind.ASYNC_SINGLE, ModeKind.SYNC_BATCH)
        if needs != (self.acquisition is not None):
            raise ValueError(f"mode {self.kind.value} {'needs' if needs else 'takes no'} acquisition")

    @classmethod
    def async_hedge(cls):
        return cls(ModeKind.ASYNC_HEDGE)

    @classmethod
    def async_single(cls, kind):
        return cls(ModeKind.ASYNC_SINGLE, kind)

    @classmethod
    def sync_batch(cls, kind):
        return cls(ModeKind.SYNC_BATCH, kind)

    @classmethod
    def random_search(cls):
        return cls(ModeKind.RANDOM)

    @property
    def name(self):
        if self.acquisition is None:
            return self.kind.value
        return f"{self.kind.value}-{self.acquisition.value}"

    @classmethod
    def parse(cls, name):
        """Inverse of :attr:`name`, e.g. ``"apBO-UCB"``."""
        head, _, tail = str(name).partition("-")
        try:
            return cls(ModeKind(head), AcquisitionKind(tail.upper()) if tail else None)
        except ValueError as exc:
            raise ValueError(f"unknown mode {name!r}: {exc}") from None

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class SchedulerConfig:
    """Engine settings; everything except ``batch`` has a working default."""

    batch: BatchConfig = field(default_factory=BatchConfig)
    kernel: KernelFamily = KernelFamily.MATERN52
    objective_noise: float = 0.0
    classifier_noise: float = DEFAULT_LABEL_NOISE
    hyper_every: int = 5
    hyper_starts: int = 8
    hyper_warm_starts: int = 2
    hyper_max_evals: int | None = None
    ucb_delta: float = 0.1
    ucb_nu: float = 1.0
    # acquisition maxima need no more precision than the GP length scales resolve
    inner: CmaEsConfig = field(default_factory=lambda: CmaEsConfig(tol_x=1e-5))
    initial_design_size: int | None = None
    cutoff: float | None = None

    def initial_size(self, dimension):
        if self.initial_design_size is not None:
            return max(self.initial_design_size, dimension + 1)
        return max(dimension + 1, 2 * self.batch.budget)


def select_batch(counts, config, classifier_active=True):
    """First under-filled batch in priority order, or None when every batch is full.

    ``counts`` maps each batch (or its position in priority order) to its
    in-flight count. The classifier batch is skipped while the classifier is
    inactive.
    """
    if not isinstance(counts, dict):
        counts = dict(zip(PRIORITY, counts))
    for batch in PRIORITY:
        if batch is Batch.EXPLORE_CLASSIF and not classifier_active:
            continue
        if counts.get(batch, 0) < config.size(batch):
            return batch
    return None


def _stack(records, attr="u"):
    return np.array([getattr(r, attr) for r in records], dtype=float)


def interpolate_objective_gp(records, spec, noise_variance=0.0, prior_mean=None):
    """Fit the objective GP on feasible completions and impute infeasible ones.

    Step one fits on feasible points only, step two predicts the posterior mean
    at infeasible completions, step three refits with those means as
    observations, which pins the objective variance near zero there.

    Returns the refitted model and the imputed values keyed by record id.

    Raises
    ------
    NoFeasibleDataError
        If no feasible completion exists.
    """
    feasible = [r for r in records if r.status is Status.FEASIBLE]
    infeasible = [r for r in records if r.status is Status.INFEASIBLE]
    if not feasible:
        raise NoFeasibleDataError("no feasible data")
    X_f = _stack(feasible)
    y_f = np.array([r.y for r in feasible])
    mu0 = float(np.mean(y_f)) if prior_mean is None else prior_mean
    Xd, yd, _ = merge_duplicates(X_f, y_f)
    base = gp_fit(Xd, yd, spec, noise_variance, mu0)
    if not infeasible:
        return base, {}
    imputed = base.predict(_stack(infeasible), return_var=False)
    rows = sorted(feasible + infeasible, key=lambda r: r.id)
    values = {r.id: r.y for r in feasible}
    values.update({r.id: float(v) for r, v in zip(infeasible, imputed)})
    X, y, _ = merge_duplicates(_stack(rows), np.array([values[r.id] for r in rows]))
    return gp_fit(X, y, spec, noise_variance, mu0), {r.id: values[r.id] for r in infeasible}


def hallucinate(records, objective_gp):
    """Training rows for every dispatched point, pending ones at the current posterior mean.

    ``objective_gp`` is the interpolated model; its mean also supplies the
    imputed values at infeasible completions. Each pending record's
    ``hallucinated_y`` is updated in place. Returns ``(X, y, ids)`` ordered by
    record id.
    """
    rows = sorted(records, key=lambda r: r.id)
    others = [r for r in rows if r.status is not Status.FEASIBLE]
    if others:
        means = objective_gp.predict(_stack(others), return_var=False)
        for r, m in zip(others, means):
            if r.pending:
                r.hallucinated_y = float(m)
        fill = {r.id: float(m) for r, m in zip(others, means)}
    else:
        fill = {}
    y = np.array([r.y if r.status is Status.FEASIBLE else fill[r.id] for r in rows])
    return _stack(rows), y, [r.id for r in rows]


@dataclass(frozen=True, eq=False)
class Models:
    """Snapshot handed to proposal code."""

    objective: object
    feasibility: FeasibilityModel
    f_best: float
    n_dispatched: int


@dataclass
class RunResult:
    records: list
    log: RunLog
    best_value: float | None
    best_x: np.ndarray | None
    clock: float
    hedge: HedgeState
    mode: SchedulerMode

    @property
    def evaluations_completed(self):
        return sum(not r.pending for r in self.records)

    def completed_by(self, t):
        return sum(1 for r in self.records if r.completed_at is not None and r.completed_at <= t)


def _known_indicator(problem, lower, span):
    known = getattr(problem, "known_constraints", None)
    if known is None or len(known) == 0:
        return None

    def indicator(U):
        return known.indicator(lower + np.atleast_2d(U) * span)

    return indicator


def propose_point(batch, models, hedge_state, rng, *, mode, dimension, inner,
                  schedule, known=None, reference=None):
    """Next unit-cube point for ``batch``.

    Returns ``(u, acquisition, info)``; ``info`` records fallbacks and the
    hedge draw, if any.
    """
    info = {}
    d = dimension
    if reference is None:
        reference = rng.random((inner.reference_samples, d))
    ind = known if known is not None else (lambda U: np.ones(np.atleast_2d(U).shape[0]))
    obj = models.objective
    clf = models.feasibility

    def explore_score(U):
        return obj.predict(U)[1] * ind(U)

    def classif_score(U):
        return clf.classification_variance(U) * ind(U)

    def fallback(reason):
        info["fallback"] = reason
        if obj is not None and reason != "objective":
            res = maximize(explore_score, d, inner, rng, reference)
            if not res.flat:
                return res.x
        if clf.active:
            res = maximize(classif_score, d, inner, rng, reference)
            if not res.flat:
                return res.x
        info["fallback"] = reason + "+uniform"
        return uniform_feasible(rng, d, known)

    acquisition = None
    if batch is Batch.ACQUISITION:
        if mode.kind is ModeKind.ASYNC_HEDGE:
            info["hedge"] = hedge_state.snapshot()
            acquisition = sample_acquisition(hedge_state, rng)
        else:
            acquisition = mode.acquisition
        if obj is None:
            return fallback("objective"), acquisition, info
        kind = acquisition
        n = models.n_dispatched

        def raw(U):
            mean, var = obj.predict(U)
            return np.asarray(evaluate_acquisition(kind, mean, np.sqrt(var), models.f_best, n, schedule))

        shift = 0.0
        if kind is AcquisitionKind.UCB:
            shift = float(np.min(raw(reference)))

        def score(U):
            value = raw(U)
            if kind is AcquisitionKind.UCB:
                value = np.maximum(value - shift, 0.0)
            return value * ind(U) * clf.prob_feasible(U)

        res = maximize(score, d, inner, rng, reference)
        if res.flat:
            return fallback("flat-acquisition"), acquisition, info
        return res.x, acquisition, info
    if batch is Batch.EXPLORE:
        if obj is None:
            return fallback("objective"), None, info
        res = maximize(explore_score, d, inner, rng, reference)
        return (fallback("flat-explore") if res.flat else res.x), None, info
    if batch is Batch.EXPLORE_CLASSIF:
        if not clf.active:
            return fallback("classifier"), None, info
        res = maximize(classif_score, d, inner, rng, reference)
        return (fallback("flat-classif") if res.flat else res.x), None, info
    raise ValueError(f"cannot propose for batch {batch}")


def uniform_feasible(rng, d, known=None, tries=10000):
    """Uniform point satisfying the known constraints (best effort)."""
    u = rng.random(d)
    if known is None:
        return u
    for _ in range(tries):
        if known(u[None, :])[0] > 0:
            return u
        u = rng.random(d)
    return u


class Scheduler:
    """One optimization run. Use :func:`run` unless you need to step manually."""

    def __init__(self, problem, config=None, mode=None, *, seed=0, log=None, executor=None,
                 real_time=False):
        self.problem = problem
        self.config = config or SchedulerConfig()
        self.mode = mode or SchedulerMode.async_hedge()
        self.seed = int(seed)
        self.d = int(problem.dimension)
        self.lower = np.asarray(problem.lower, dtype=float)
        self.upper = np.asarray(problem.upper, dtype=float)
        self.span = self.upper - self.lower
        self.real_time = real_time
        if executor is None:
            if real_time:
                executor = ThreadedExecutor(self.config.batch.budget, cutoff=self.config.cutoff)
            else:
                executor = SimulatedExecutor(cutoff=self.config.cutoff)
        self.executor = executor
        self.log = log if log is not None else RunLog()
        streams = np.random.SeedSequence(self.seed).spawn(5)
        self.rng_design, self.rng_duration, self.rng_propose, self.rng_hyper, self.rng_random = (
            np.random.default_rng(s) for s in streams
        )
        self.records = []
        self.hedge = HedgeState()
        self.best_value = None
        self.best_id = None
        self.known = _known_indicator(problem, self.lower, self.span)
        self.schedule = UcbSchedule(self.d, self.config.ucb_delta, self.config.ucb_nu)
        self._free_workers = list(range(self.config.batch.budget))
        self._models = None
        self._dirty = True
        self._refits = 0
        self._obj_spec = None
        self._clf_spec = None
        self._obj_spec_data = -1
        self._clf_spec_data = -1
        self._obj_spec_refit = -10 ** 9
        self._clf_spec_refit = -10 ** 9
        self._initial = []
        if self.mode.kind is not ModeKind.RANDOM:
            self._initial = list(self._initial_design())

    # ------------------------------------------------------------------ helpers
    def to_real(self, u):
        return self.lower + np.asarray(u) * self.span

    def _initial_design(self):
        n = self.config.initial_size(self.d)
        sampler = qmc.LatinHypercube(d=self.d, seed=self.rng_design)
        pts = sampler.random(n)
        if self.known is not None:
            for i in range(n):
                if self.known(pts[i][None, :])[0] == 0:
                    pts[i] = uniform_feasible(self.rng_design, self.d, self.known)
        return pts

    def counts(self):
        c = {b: 0 for b in Batch}
        for r in self.records:
            if r.pending:
                c[r.batch] += 1
        return c

    def in_flight(self):
        return sum(r.pending for r in self.records)

    @property
    def classifier_active(self):
        return any(r.status is Status.INFEASIBLE for r in self.records)

    def n_completed(self):
        return sum(not r.pending for r in self.records)

    def _stop_dispatch(self, max_evaluations, max_time):
        if max_evaluations is not None and len(self.records) >= max_evaluations:
            return True
        return max_time is not None and self.executor.now() >= max_time

    # ------------------------------------------------------------------ events
    def _start_event(self, max_evaluations, max_time):
        self.log.append({
            "event": "run_start",
            "t": self.executor.now(),
            "problem": getattr(self.problem, "name", type(self.problem).__name__),
            "dimension": self.d,
            "lower": self.lower,
            "upper": self.upper,
            "mode": self.mode.name,
            "seed": self.seed,
            "batch": list(self.config.batch.as_tuple()),
            "budget": self.config.batch.budget,
            "max_evaluations": max_evaluations,
            "max_time": max_time,
            "sense": "maximize",
            # multiply logged values by this to get the problem's own sense
            "report_sign": float(getattr(self.problem, "report_sign", 1.0)),
            "time_model": "real" if self.real_time else "simulated",
        })

    def dispatch(self, u, batch, acquisition=None, info=None):
        counts = self.counts()
        worker = self._free_workers.pop(0)
        now = self.executor.now()
        rec = EvaluationRecord(
            id=len(self.records),
            x=self.to_real(u),
            u=np.asarray(u, dtype=float),
            batch=Batch(batch),
            acquisition=acquisition,
            dispatched_at=now,
            worker=worker,
        )
        self.records.append(rec)
        if info and "hedge" in info:
            snap = info["hedge"]
            self.log.append({
                "event": "hedge_draw",
                "t": now,
                "id": rec.id,
                "chosen": acquisition,
                **snap,
            })
        event = {
            "event": "dispatch",
            "t": now,
            "id": rec.id,
            "batch": rec.batch,
            "acquisition": acquisition,
            "worker": worker,
            "x": rec.x,
            "in_flight": {b.value: counts[b] for b in Batch},
            "classifier_active": self.classifier_active,
        }
        if info and "fallback" in info:
            event["fallback"] = info["fallback"]
        self.log.append(event)
        duration = float(self.problem.sample_duration(self.rng_duration))
        self.executor.submit(rec.id, self.problem.evaluate, rec.x, duration)
        self._dirty = True
        return rec

    def harvest(self, completion):
        """Finalize a record, apply any hedge reward and mark the models stale."""
        rec = self.records[completion.id]
        rec.completed_at = completion.time
        rec.hallucinated_y = None
        is_new_best = False
        if completion.ok:
            rec.status, rec.y = Status.FEASIBLE, float(completion.value)
            if self.best_value is None or rec.y > self.best_value:
                is_new_best = True
                self.best_value, self.best_id = rec.y, rec.id
        else:
            rec.status, rec.error = Status.INFEASIBLE, completion.error
        self._free_workers.append(rec.worker)
        self._free_workers.sort()
        self.hedge.iteration = self.n_completed()
        rewarded = False
        if rec.batch is Batch.ACQUISITION and self.mode.kind is ModeKind.ASYNC_HEDGE:
            before = self.hedge.n_rewards
            record_outcome(self.hedge, rec.acquisition, completion.ok, is_new_best)
            rewarded = self.hedge.n_rewards > before
        self.log.append({
            "event": "complete",
            "t": completion.time,
            "id": rec.id,
            "batch": rec.batch,
            "acquisition": rec.acquisition,
            "worker": rec.worker,
            "status": rec.status,
            "y": rec.y,
            "error": rec.error,
            "dispatched_at": rec.dispatched_at,
            "duration": completion.time - rec.dispatched_at,
            "new_best": is_new_best,
            "rewarded": rewarded,
            "best_so_far": self.best_value,
        })
        self._dirty = True

    # ------------------------------------------------------------------ models
    def _hyper_due(self, last_refit, last_data, n_data):
        return (self._refits - last_refit >= self.config.hyper_every) and n_data != last_data

    def _refit(self):
        self._refits += 1
        cfg = self.config
        feasible = [r for r in self.records if r.status is Status.FEASIBLE]
        hyper_refit = []
        objective = None
        n_merged = 0
        hallucinated_ids = []
        if feasible:
            X_f = _stack(feasible)
            y_f = np.array([r.y for r in feasible])
            mu0 = float(np.mean(y_f))
            if self._obj_spec is None or self._hyper_due(self._obj_spec_refit, self._obj_spec_data, len(feasible)):
                Xd, yd, _ = merge_duplicates(X_f, y_f)
                try:
                    self._obj_spec = fit_hyperparameters(
                        Xd, yd, cfg.kernel, noise_variance=cfg.objective_noise, prior_mean=mu0,
                        n_starts=cfg.hyper_starts if self._obj_spec is None else cfg.hyper_warm_starts,
                        max_evals=cfg.hyper_max_evals, initial=self._obj_spec, rng=self.rng_hyper,
                    )
                    hyper_refit.append("objective")
                except NumericalError as exc:
                    log.warning("objective hyperparameter search failed: %s", exc)
                    if self._obj_spec is None:
                        self._obj_spec = KernelSpec(cfg.kernel, max(float(np.var(y_f)), 1e-12), np.full(self.d, 0.3))
                self._obj_spec_refit, self._obj_spec_data = self._refits, len(feasible)
            try:
                interp, _ = interpolate_objective_gp(self.records, self._obj_spec, cfg.objective_noise, mu0)
                X, y, ids = hallucinate(self.records, interp)
                hallucinated_ids = [r.id for r in self.records if r.pending]
                Xm, ym, keep = merge_duplicates(X, y)
                n_merged = len(ids) - len(keep)
                objective = gp_fit(Xm, ym, self._obj_spec, cfg.objective_noise, mu0)
            except NumericalError as exc:
                log.warning("objective GP fit failed: %s", exc)
                objective = None

        feas_model = FeasibilityModel(None)
        if self.classifier_active:
            X = _stack(self.records)
            labels = np.array([r.status is not Status.INFEASIBLE for r in self.records])
            Xd, ld, _ = merge_duplicates(X, labels.astype(float))
            n_labels = len(self.records) - sum(r.pending for r in self.records)
            if self._clf_spec is None or self._hyper_due(self._clf_spec_refit, self._clf_spec_data, n_labels):
                targets = np.where(ld > 0.5, 1.0, -1.0)
                try:
                    self._clf_spec = fit_hyperparameters(
                        Xd, targets, cfg.kernel, noise_variance=cfg.classifier_noise, prior_mean=0.0,
                        n_starts=cfg.hyper_starts if self._clf_spec is None else cfg.hyper_warm_starts,
                        max_evals=cfg.hyper_max_evals, initial=self._clf_spec, rng=self.rng_hyper,
                    )
                    hyper_refit.append("classifier")
                except NumericalError as exc:
                    log.warning("classifier hyperparameter search failed: %s", exc)
                    if self._clf_spec is None:
                        self._clf_spec = KernelSpec(cfg.kernel, 1.0, np.full(self.d, 0.3))
                self._clf_spec_refit, self._clf_spec_data = self._refits, n_labels
            try:
                feas_model = fit_feasibility(Xd, ld > 0.5, family=cfg.kernel,
                                             noise_variance=cfg.classifier_noise, spec=self._clf_spec)
            except NumericalError as exc:
                log.warning("classifier fit failed: %s", exc)

        if self.best_value is not None:
            f_best = self.best_value
        elif objective is not None and hallucinated_ids:
            f_best = float(max(self.records[i].hallucinated_y for i in hallucinated_ids))
        else:
            f_best = 0.0
        self._models = Models(objective, feas_model, f_best, len(self.records))
        self.log.append({
            "event": "refit",
            "t": self.executor.now(),
            "refit": self._refits,
            "hyper": hyper_refit,
            "n_dispatched": len(self.records),
            "n_feasible": len(feasible),
            "n_infeasible": sum(r.status is Status.INFEASIBLE for r in self.records),
            "hallucinated_ids": hallucinated_ids,
            "n_train": 0 if objective is None else objective.n,
            "n_merged": n_merged,
            "objective_kernel": None if self._obj_spec is None else self._obj_spec.to_dict(),
            "classifier_active": feas_model.active,
            "f_best": f_best,
        })
        self._dirty = False

    def models(self):
        if self._dirty or self._models is None:
            self._refit()
        return self._models

    # ------------------------------------------------------------------ proposal
    def _propose(self, batch):
        models = self.models()
        return propose_point(
            batch, models, self.hedge, self.rng_propose, mode=self.mode, dimension=self.d,
            inner=self.config.inner, schedule=self.schedule, known=self.known,
        )

    def _dispatch_next_model_point(self, batch):
        u, acquisition, info = self._propose(batch)
        return self.dispatch(u, batch, acquisition, info)

    # ------------------------------------------------------------------ loops
    def _fill_async(self, max_evaluations, max_time):
        budget = self.config.batch.budget
        while self.in_flight() < budget and not self._stop_dispatch(max_evaluations, max_time):
            if self.mode.kind is ModeKind.RANDOM:
                self.dispatch(uniform_feasible(self.rng_random, self.d, self.known), Batch.RANDOM)
                continue
            if self._initial:
                self.dispatch(self._initial.pop(0), Batch.INITIAL)
                continue
            if self.n_completed() == 0:
                break
            batch = select_batch(self.counts(), self.config.batch, self.classifier_active)
            if batch is None:
                break
            self._dispatch_next_model_point(batch)

    def _fill_sync(self, max_evaluations, max_time):
        budget = self.config.batch.budget
        if self._initial:
            while self._initial and self.in_flight() < budget and not self._stop_dispatch(max_evaluations, max_time):
                self.dispatch(self._initial.pop(0), Batch.INITIAL)
            return
        for batch in PRIORITY:
            if batch is Batch.EXPLORE_CLASSIF and not self.classifier_active:
                continue
            for _ in range(self.config.batch.size(batch)):
                if self._stop_dispatch(max_evaluations, max_time):
                    return
                self._dispatch_next_model_point(batch)

    def run(self, max_evaluations=None, max_time=None):
        if max_evaluations is None and max_time is None:
            raise ValueError("give max_evaluations and/or max_time")
        if not self.records:
            self._start_event(max_evaluations, max_time)
        sync = self.mode.kind is ModeKind.SYNC_BATCH
        try:
            while True:
                if sync:
                    if self.executor.pending() == 0:
                        self._fill_sync(max_evaluations, max_time)
                else:
                    self._fill_async(max_evaluations, max_time)
                if self.executor.pending() == 0:
                    break
                for completion in sorted(self.executor.wait(), key=lambda c: (c.time, c.id)):
                    self.harvest(completion)
        finally:
            self.executor.close()
        self.log.append({
            "event": "run_end",
            "t": self.executor.now(),
            "evaluations_completed": self.n_completed(),
            "best": self.best_value,
            "best_id": self.best_id,
            "hedge_gains": [float(g) for g in self.hedge.gains],
        })
        return self.result()

    def result(self):
        best_x = None if self.best_id is None else self.records[self.best_id].x
        return RunResult(self.records, self.log, self.best_value, best_x, self.executor.now(),
                         self.hedge, self.mode)

    # ------------------------------------------------------------------ resume
    @classmethod
    def resume(cls, log_path, problem, config=None, mode=None, *, seed=None, executor=None):
        """Rebuild state from a real-time run log and keep appending to it.

        Completed evaluations are restored as-is; evaluations that were still
        in flight when the log ends are dispatched again.
        """
        old = RunLog.load(log_path)
        start = old.of("run_start")
        if not start:
            raise ValueError(f"{log_path} has no run_start event")
        header = start[0]
        if header.get("time_model") != "real":
            raise ValueError("only real-time run logs can be resumed")
        mode = mode or SchedulerMode.parse(header["mode"])
        seed = header["seed"] if seed is None else seed
        sched = cls(problem, config, mode, seed=seed, log=RunLog(log_path, append=True),
                    executor=executor, real_time=True)
        completes = {e["id"]: e for e in old.of("complete")}
        redo = []
        n_initial = 0
        for e in old.of("dispatch"):
            batch = Batch(e["batch"])
            if batch is Batch.INITIAL:
                n_initial += 1
            if e["id"] not in completes:
                redo.append(e)
                continue
            c = completes[e["id"]]
            x = np.asarray(e["x"], dtype=float)
            rec = EvaluationRecord(
                id=len(sched.records), x=x, u=(x - sched.lower) / sched.span, batch=batch,
                acquisition=None if e["acquisition"] is None else AcquisitionKind(e["acquisition"]),
                status=Status(c["status"]), y=c["y"], dispatched_at=e["t"],
                completed_at=c["t"], worker=e["worker"], error=c.get("error"),
            )
            sched.records.append(rec)
            if rec.status is Status.FEASIBLE and (sched.best_value is None or rec.y > sched.best_value):
                is_new = True
                sched.best_value, sched.best_id = rec.y, rec.id
            else:
                is_new = False
            if rec.batch is Batch.ACQUISITION and mode.kind is ModeKind.ASYNC_HEDGE:
                record_outcome(sched.hedge, rec.acquisition, rec.status is Status.FEASIBLE, is_new)
        sched.hedge.iteration = sched.n_completed()
        sched._initial = sched._initial[n_initial:]
        sched.log.append({"event": "resume", "t": sched.executor.now(), "restored": len(sched.records),
                          "redispatched": [e["id"] for e in redo]})
        for e in redo:
            x = np.asarray(e["x"], dtype=float)
            acq = None if e["acquisition"] is None else AcquisitionKind(e["acquisition"])
            sched.dispatch((x - sched.lower) / sched.span, Batch(e["batch"]), acq)
        return sched


def run(problem, config=None, mode=None, *, max_evaluations=None, max_time=None, seed=0,
        log_path=None, executor=None, real_time=False):
    """Optimize ``problem`` (maximizing ``problem.evaluate``) and return a :class:`RunResult`.

    ``problem`` needs ``dimension``, ``lower``, ``upper``, ``evaluate(x)`` and
    ``sample_duration(rng)``; ``known_constraints`` and ``name`` are optional.
    Dispatching stops once ``max_evaluations`` points have been dispatched or
    the clock passes ``max_time``; in-flight evaluations then drain.
    """
    runlog = RunLog(log_path)
    try:
        sched = Scheduler(problem, config, mode, seed=seed, log=runlog, executor=executor,
                          real_time=real_time)
        return sched.run(max_evaluations=max_evaluations, max_time=max_time)
    finally:
        runlog.close()


def run_sync_variant(problem, config=None, acquisition=AcquisitionKind.EI, **kwargs):
    return run(problem, config, SchedulerMode.sync_batch(acquisition), **kwargs)


def run_random_variant(problem, config=None, **kwargs):
    return run(problem, config, SchedulerMode.random_search(), **kwargs)
