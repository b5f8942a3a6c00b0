"""Hedge portfolio over PI / EI / UCB with binary feasible-new-best rewards."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .acquisition import PORTFOLIO, AcquisitionKind


def eta(n, k=len(PORTFOLIO)):
    """Learning rate ``sqrt(8 ln k / n)``."""
    if n <= 0:
        raise ValueError("n must be positive")
    if k < 2:
        raise ValueError("need at least two acquisitions")
    return math.sqrt(8.0 * math.log(k) / n)


def softmax_pmf(gains, eta_value):
    g = eta_value * np.asarray(gains, dtype=float)
    w = np.exp(g - g.max())
    return w / w.sum()


def inverse_cdf_sample(pmf, rng):
    """Index drawn from ``pmf`` by inverting its cumulative sum."""
    cdf = np.cumsum(pmf)
    u = rng.random() * cdf[-1]
    return min(int(np.searchsorted(cdf, u, side="right")), len(pmf) - 1)


@dataclass
class HedgeState:
    """Cumulative gains per acquisition, in ``PORTFOLIO`` order.

    ``iteration`` is the number of completed queries; the scheduler keeps it
    current and it sets the learning rate.
    """

    gains: np.ndarray = field(default_factory=lambda: np.zeros(len(PORTFOLIO)))
    draws: np.ndarray = field(default_factory=lambda: np.zeros(len(PORTFOLIO), dtype=int))
    n_rewards: int = 0
    iteration: int = 0

    @property
    def eta(self):
        return eta(max(self.iteration, 1), len(PORTFOLIO))

    def snapshot(self):
        return {
            "gains": [float(g) for g in self.gains],
            "draws": [int(d) for d in self.draws],
            "n": int(self.iteration),
            "eta": self.eta,
            "pmf": [float(p) for p in portfolio_pmf(self)],
        }


def record_outcome(state, acquisition, feasible, is_new_best):
    """Reward the acquisition that proposed a completed point.

    The gain grows by one only for a feasible point that improved on the
    best feasible value at arrival time.
    """
    j = PORTFOLIO.index(AcquisitionKind(acquisition))
    if feasible and is_new_best:
        state.gains[j] += 1.0
        state.n_rewards += 1
    return state


def portfolio_pmf(state, eta_value=None):
    return softmax_pmf(state.gains, state.eta if eta_value is None else eta_value)


def sample_acquisition(state, rng):
    j = inverse_cdf_sample(portfolio_pmf(state), rng)
    state.draws[j] += 1
    return PORTFOLIO[j]


def gains_from_history(history):
    """Recompute gains from ``(acquisition, feasible, is_new_best)`` triples."""
    gains = np.zeros(len(PORTFOLIO))
    for kind, feasible, new_best in history:
        if feasible and new_best:
            gains[PORTFOLIO.index(AcquisitionKind(kind))] += 1.0
    return gains
