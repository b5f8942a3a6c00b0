"""Asynchronous parallel constrained Bayesian optimization.

An objective GP and a feasibility GP drive three prioritized batches
(acquisition, explore, classifier-explore) whose acquisition batch draws
PI / EI / UCB from a GP-Hedge portfolio.
"""
from .acquisition import AcquisitionKind, KnownConstraint, KnownConstraintSet
from .benchmarks import BenchmarkProblem, add_synthetic_constrained, builtin_problems, get_problem
from .cmaes import CmaEsConfig, maximize
from .gp import KernelFamily, KernelSpec, fit_hyperparameters, gp_fit, gp_predict
from .runlog import RunLog
from .scheduler import (
    BatchConfig,
    RunResult,
    Scheduler,
    SchedulerConfig,
    SchedulerMode,
    run,
    run_random_variant,
    run_sync_variant,
)

__all__ = [
    "AcquisitionKind",
    "BatchConfig",
    "BenchmarkProblem",
    "CmaEsConfig",
    "KernelFamily",
    "KernelSpec",
    "KnownConstraint",
    "KnownConstraintSet",
    "RunLog",
    "RunResult",
    "Scheduler",
    "SchedulerConfig",
    "SchedulerMode",
    "add_synthetic_constrained",
    "builtin_problems",
    "fit_hyperparameters",
    "get_problem",
    "gp_fit",
    "gp_predict",
    "maximize",
    "run",
    "run_random_variant",
    "run_sync_variant",
]
