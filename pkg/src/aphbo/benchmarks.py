"""Benchmark catalog.

Objectives are written in minimization form, vectorized over the rows of an
``(m, d)`` array. :meth:`BenchmarkProblem.evaluate` returns the negated value
so the (maximizing) engine can consume problems directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .acquisition import KnownConstraint, KnownConstraintSet

DEFAULT_DURATION = (0.03, 0.9)


class InfeasibleEvaluation(RuntimeError):
    """Raised by an evaluation that fails, i.e. hits an unknown constraint."""


def _rows(X):
    return np.atleast_2d(np.asarray(X, dtype=float))


def eggholder(X):
    X = _rows(X)
    x1, x2 = X[:, 0], X[:, 1]
    return (-(x2 + 47) * np.sin(np.sqrt(np.abs(x2 + x1 / 2 + 47)))
            - x1 * np.sin(np.sqrt(np.abs(x1 - (x2 + 47)))))


def camel3(X):
    X = _rows(X)
    x1, x2 = X[:, 0], X[:, 1]
    return 2 * x1 ** 2 - 1.05 * x1 ** 4 + x1 ** 6 / 6 + x1 * x2 + x2 ** 2


def camel6(X):
    X = _rows(X)
    x1, x2 = X[:, 0], X[:, 1]
    return (4 - 2.1 * x1 ** 2 + x1 ** 4 / 3) * x1 ** 2 + x1 * x2 + (-4 + 4 * x2 ** 2) * x2 ** 2


HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN3_A = np.array([[3.0, 10, 30], [0.1, 10, 35], [3.0, 10, 30], [0.1, 10, 35]])
HARTMANN3_P = 1e-4 * np.array([
    [3689, 1170, 2673],
    [4699, 4387, 7470],
    [1091, 8732, 5547],
    [381, 5743, 8828],
])
HARTMANN6_A = np.array([
    [10, 3, 17, 3.5, 1.7, 8],
    [0.05, 10, 17, 0.1, 8, 14],
    [3, 3.5, 1.7, 10, 17, 8],
    [17, 8, 0.05, 10, 0.1, 14],
])
HARTMANN6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
])


def _hartmann_sum(X, A, P):
    X = _rows(X)
    inner = np.sum(A[None] * (X[:, None, :] - P[None]) ** 2, axis=2)
    return np.exp(-inner) @ HARTMANN_ALPHA


def hartmann3(X):
    return -_hartmann_sum(X, HARTMANN3_A, HARTMANN3_P)


def hartmann4(X):
    return (1.1 - _hartmann_sum(X, HARTMANN6_A[:, :4], HARTMANN6_P[:, :4])) / 0.839


def hartmann6(X):
    return -_hartmann_sum(X, HARTMANN6_A, HARTMANN6_P)


def ackley(X, a=20.0, b=0.2, c=2 * math.pi):
    X = _rows(X)
    return (-a * np.exp(-b * np.sqrt(np.mean(X ** 2, axis=1)))
            - np.exp(np.mean(np.cos(c * X), axis=1)) + a + math.e)


def michalewicz(X, m=10):
    X = _rows(X)
    i = np.arange(1, X.shape[1] + 1)
    return -np.sum(np.sin(X) * np.sin(i * X ** 2 / math.pi) ** (2 * m), axis=1)


FLOAT_MAX = np.finfo(float).max


def perm0db(X, beta=0.5):
    """Saturates at the largest double near the domain corners, where the
    exact value exceeds the float range."""
    X = _rows(X)
    d = X.shape[1]
    j = np.arange(1, d + 1, dtype=float)
    total = np.zeros(X.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, d + 1):
            inner = np.sum((j + beta) * (X ** i - j ** (-i)), axis=1)
            total = total + inner ** 2
    return np.where(np.isfinite(total), total, FLOAT_MAX)


def rosenbrock(X):
    X = _rows(X)
    return np.sum(100 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (X[:, :-1] - 1) ** 2, axis=1)


def dixon_price(X):
    X = _rows(X)
    i = np.arange(2, X.shape[1] + 1)
    return (X[:, 0] - 1) ** 2 + np.sum(i * (2 * X[:, 1:] ** 2 - X[:, :-1]) ** 2, axis=1)


def trid(X):
    X = _rows(X)
    return np.sum((X - 1) ** 2, axis=1) - np.sum(X[:, 1:] * X[:, :-1], axis=1)


def sumsqu(X):
    X = _rows(X)
    return np.sum(np.arange(1, X.shape[1] + 1) * X ** 2, axis=1)


def sumpow(X):
    X = _rows(X)
    return np.sum(np.abs(X) ** np.arange(2, X.shape[1] + 2), axis=1)


def spheref(X):
    return np.sum(_rows(X) ** 2, axis=1)


def rothyp(X):
    X = _rows(X)
    return np.sum(np.cumsum(X ** 2, axis=1), axis=1)


@dataclass(frozen=True)
class Disk:
    """Ball ``|x - center| < radius`` in problem coordinates."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def contains(self, X):
        X = _rows(X)
        return np.linalg.norm(X - np.asarray(self.center), axis=1) < self.radius


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    """A test problem in minimization form.

    ``known_optimum`` is ``(f_star, x_star)`` or None. ``evaluate`` returns
    ``-objective(x)`` and raises :class:`InfeasibleEvaluation` inside any
    unknown-infeasible disk.
    """

    name: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    objective: object
    known_optimum: tuple | None = None
    default_batch: tuple = (1, 0, 0)
    max_evaluations: int = 100
    duration: tuple = DEFAULT_DURATION
    known_constraints: KnownConstraintSet = field(default_factory=KnownConstraintSet)
    unknown_disks: tuple = ()
    notes: str = ""

    def __post_init__(self):
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dimension,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dimension,)).copy()
        if np.any(hi <= lo):
            raise ValueError(f"{self.name}: empty domain")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        lo_t, hi_t = self.duration
        if not 0 <= lo_t <= hi_t:
            raise ValueError(f"{self.name}: bad duration interval {self.duration}")

    def __call__(self, X):
        """Minimization-form objective on rows of ``X`` (no constraint checks)."""
        return self.objective(X)

    def feasible(self, X):
        """True where ``X`` avoids every unknown-infeasible disk."""
        X = _rows(X)
        ok = np.ones(X.shape[0], dtype=bool)
        for disk in self.unknown_disks:
            ok &= ~disk.contains(X)
        return ok

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if not self.feasible(x)[0]:
            raise InfeasibleEvaluation(f"{self.name}: evaluation failed at {x.tolist()}")
        return -float(self.objective(x)[0])

    @property
    def report_sign(self):
        """Logged (maximized) values times this give objective values."""
        return -1.0

    def sample_duration(self, rng):
        lo, hi = self.duration
        return float(rng.uniform(lo, hi))

    def with_duration(self, lo, hi):
        return replace(self, duration=(float(lo), float(hi)))


def add_synthetic_constrained(problem, center, radius, known=None):
    """Copy of ``problem`` that fails inside a disk; ``known`` adds cheap constraints.

    ``known`` is a :class:`KnownConstraint` or an iterable of them.
    """
    extra = ()
    if known is not None:
        extra = (known,) if isinstance(known, KnownConstraint) else tuple(known)
    return replace(
        problem,
        name=f"{problem.name}+disk",
        unknown_disks=problem.unknown_disks + (Disk(center, radius),),
        known_constraints=KnownConstraintSet(problem.known_constraints.constraints + extra),
    )


def _opt(f, x):
    return (float(f), tuple(float(v) for v in x))


def builtin_problems():
    """The 16-problem catalog keyed by name, in ascending dimension order."""
    dixon = [2 ** (-(2 ** i - 2) / 2 ** i) for i in range(1, 26)]
    trid_x = [i * (31 - i) for i in range(1, 31)]
    problems = [
        BenchmarkProblem("eggholder", 2, -512, 512, eggholder,
                         _opt(-959.6407, (512, 404.2319)), (2, 2, 0), 80),
        BenchmarkProblem("camel3", 2, -5, 5, camel3, _opt(0.0, (0, 0)), (2, 2, 0), 80),
        BenchmarkProblem("camel6", 2, [-3, -2], [3, 2], camel6,
                         _opt(-1.0316, (-0.0898, 0.7126)), (3, 1, 0), 80),
        BenchmarkProblem("hartmann3", 3, 0, 1, hartmann3,
                         _opt(-3.86278, (0.114614, 0.555649, 0.852547)), (3, 3, 0), 150),
        BenchmarkProblem("hartmann4", 4, 0, 1, hartmann4, None, (4, 4, 0), 160,
                         notes="no optimum listed"),
        BenchmarkProblem("ackley", 5, -32.768, 32.768, ackley, _opt(0.0, [0] * 5), (6, 4, 0), 200,
                         notes="a=20, b=0.2, c=2pi"),
        BenchmarkProblem("hartmann6", 6, 0, 1, hartmann6,
                         _opt(-3.32237, (0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573)),
                         (5, 5, 0), 300),
        BenchmarkProblem("michalewicz", 10, 0, math.pi, michalewicz, None, (5, 5, 0), 400,
                         notes="m=10"),
        BenchmarkProblem("rosenbrock", 20, -5, 10, rosenbrock, _opt(0.0, [1] * 20), (6, 4, 0), 400),
        BenchmarkProblem("dixon-price", 25, -10, 10, dixon_price, _opt(0.0, dixon), (7, 7, 0), 480),
        BenchmarkProblem("trid", 30, -900, 900, trid, _opt(-30 * 34 * 29 / 6, trid_x), (6, 4, 0), 400),
        BenchmarkProblem("sumsqu", 40, -5.12, 5.12, sumsqu, _opt(0.0, [0] * 40), (6, 4, 0), 400),
        BenchmarkProblem("sumpow", 50, -1, 1, sumpow, _opt(0.0, [0] * 50), (6, 4, 0), 400),
        BenchmarkProblem("spheref", 60, -5.12, 5.12, spheref, _opt(0.0, [0] * 60), (6, 4, 0), 400),
        BenchmarkProblem("rothyp", 70, -65.536, 65.536, rothyp, _opt(0.0, [0] * 70), (6, 4, 0), 400),
        BenchmarkProblem("perm0db", 80, -80, 80, perm0db, _opt(0.0, [1 / j for j in range(1, 81)]),
                         (6, 4, 0), 400, notes="beta=0.5"),
    ]
    return {p.name: p for p in problems}


def get_problem(name):
    catalog = builtin_problems()
    try:
        return catalog[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(catalog)}") from None
