"""PI / EI / UCB acquisitions and the constrained acquisition product.

Everything here is framed as maximization. Functions accept scalars or arrays
and broadcast; scalar inputs give Python floats back.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

STDDEV_FLOOR = 1e-12
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class AcquisitionKind(str, enum.Enum):
    PI = "PI"
    EI = "EI"
    UCB = "UCB"


# fixed order shared with the hedge portfolio
PORTFOLIO = (AcquisitionKind.PI, AcquisitionKind.EI, AcquisitionKind.UCB)


def _ret(value, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return float(value)
    return value


def improvement_score(mean, stddev, f_best):
    """Standardized improvement ``(mean - f_best) / stddev``.

    A vanishing ``stddev`` maps to +inf, -inf or 0 according to the sign of
    ``mean - f_best``.
    """
    mean_a = np.asarray(mean, dtype=float)
    sd = np.asarray(stddev, dtype=float)
    if np.any(sd < 0):
        raise ValueError("stddev must be nonnegative")
    diff = mean_a - f_best
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(sd < STDDEV_FLOOR, np.sign(diff) * np.inf, diff / np.maximum(sd, STDDEV_FLOOR))
    gamma = np.where((sd < STDDEV_FLOOR) & (diff == 0), 0.0, gamma)
    return _ret(gamma, mean, stddev, f_best)


def acq_pi(mean, stddev, f_best):
    gamma = np.asarray(improvement_score(mean, stddev, f_best))
    return _ret(ndtr(gamma), mean, stddev, f_best)


def acq_ei(mean, stddev, f_best):
    """Expected improvement ``stddev * (g * Phi(g) + phi(g))``; exactly 0 at zero stddev."""
    gamma = np.asarray(improvement_score(mean, stddev, f_best))
    sd = np.asarray(stddev, dtype=float)
    finite = np.isfinite(gamma)
    g = np.where(finite, gamma, 0.0)
    value = sd * (g * ndtr(g) + _INV_SQRT_2PI * np.exp(-0.5 * g * g))
    value = np.where(finite & (sd >= STDDEV_FLOOR), np.maximum(value, 0.0), 0.0)
    return _ret(value, mean, stddev, f_best)


@dataclass(frozen=True)
class UcbSchedule:
    """Exploration weight ``kappa(n) = sqrt(nu * 2 log(n^(d/2+2) pi^2 / (3 delta)))``."""

    dimension: int
    delta: float = 0.1
    nu: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.dimension < 1 or self.nu <= 0:
            raise ValueError("dimension must be >= 1 and nu > 0")

    def gamma(self, n):
        n = max(int(n), 1)
        return 2.0 * (
            (self.dimension / 2.0 + 2.0) * math.log(n)
            + math.log(math.pi ** 2 / (3.0 * self.delta))
        )

    def kappa(self, n):
        return math.sqrt(self.nu * self.gamma(n))


def acq_ucb(mean, stddev, n, schedule):
    kappa = schedule.kappa(n)
    value = np.asarray(mean, dtype=float) + kappa * np.asarray(stddev, dtype=float)
    return _ret(value, mean, stddev)


def evaluate_acquisition(kind, mean, stddev, f_best, n, schedule):
    kind = AcquisitionKind(kind)
    if kind is AcquisitionKind.PI:
        return acq_pi(mean, stddev, f_best)
    if kind is AcquisitionKind.EI:
        return acq_ei(mean, stddev, f_best)
    return acq_ucb(mean, stddev, n, schedule)


@dataclass(frozen=True)
class KnownConstraint:
    """Inequality ``func(x) <= threshold`` that is cheap to check.

    With ``vectorized`` set, ``func`` takes an ``(m, d)`` array and returns
    ``m`` values; otherwise it is called row by row.
    """

    func: object
    threshold: float = 0.0
    name: str = ""
    vectorized: bool = False

    def satisfied(self, X):
        X = np.atleast_2d(X)
        if self.vectorized:
            return np.asarray(self.func(X), dtype=float) <= self.threshold
        return np.array([self.func(x) <= self.threshold for x in X], dtype=bool)


@dataclass(frozen=True)
class KnownConstraintSet:
    constraints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))

    def __len__(self):
        return len(self.constraints)

    def indicator(self, X):
        """1.0 where every constraint holds, 0.0 where any is violated (row-wise)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for c in self.constraints:
            ok &= c.satisfied(X)
        return ok.astype(float)


def constrained_acquisition(raw, x, known, p_feasible):
    """``raw * indicator(x) * p_feasible``.

    ``x`` may be a single point or a matrix of rows aligned with ``raw``.
    Raw values should be nonnegative (shift UCB beforehand, see
    :func:`ucb_shift`) or the product stops penalizing violations.
    """
    known = known or KnownConstraintSet()
    X = np.atleast_2d(np.asarray(x, dtype=float))
    ind = known.indicator(X) if len(known) else np.ones(X.shape[0])
    value = np.asarray(raw, dtype=float) * np.where(ind > 0, 1.0, 0.0) * np.asarray(p_feasible, dtype=float)
    if np.ndim(raw) == 0 and np.ndim(p_feasible) == 0 and X.shape[0] == 1:
        return float(np.ravel(value)[0])
    return value


def ucb_shift(ucb_values):
    """Constant that makes UCB values over a reference population nonnegative."""
    return float(np.min(ucb_values))
