"""CMA-ES maximizer over the unit cube.

Standard (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation and
rank-one plus rank-mu covariance updates. Candidates are clipped to the cube
before scoring. A uniform reference sample is scored first and seeds the
first run, so the returned value never falls below that sample's best.
Each of the ``restarts`` extra runs begins from a uniform point with the
population doubled relative to the previous run. A final small-step run
polishes the incumbent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class CmaEsConfig:
    population_size: int | None = None
    max_generations: int | None = None
    initial_sigma: float = 0.3
    restarts: int = 1
    seed: int | None = None
    reference_samples: int = 1000
    polish_sigma: float = 0.01
    tol_x: float = 1e-7
    tol_fun: float = 1e-10

    def popsize(self, dimension):
        lam = self.population_size or 4 + int(3 * math.log(dimension))
        if lam < 4:
            raise ValueError("population_size must be at least 4")
        return lam

    def generations(self, dimension):
        return self.max_generations or 100 * dimension


class MaximizeResult(NamedTuple):
    x: np.ndarray
    value: float
    flat: bool
    evaluations: int


def _weights(lam):
    mu = lam // 2
    w = math.log(lam / 2 + 0.5) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    return mu, w, 1.0 / np.sum(w ** 2)


def _cma_run(score, mean, sigma, lam, generations, rng, tol_x, tol_fun):
    """One CMA-ES descent on ``-score``; returns best point, value, evaluations."""
    n = mean.size
    mu, w, mueff = _weights(lam)
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n ** 2))
    # refresh the eigendecomposition only as often as C can change materially
    eigen_every = max(1, int(1 / (10 * n * (c1 + cmu))))

    pc = np.zeros(n)
    ps = np.zeros(n)
    B = np.eye(n)
    D = np.ones(n)
    C = np.eye(n)
    best_x, best_f = mean.copy(), -math.inf
    evals = 0
    history = []
    for gen in range(generations):
        z = rng.standard_normal((lam, n))
        y = (z * D) @ B.T
        X = np.clip(mean + sigma * y, 0.0, 1.0)
        f = np.asarray(score(X), dtype=float)
        evals += lam
        f = np.where(np.isfinite(f), f, -math.inf)
        order = np.argsort(-f, kind="stable")
        if f[order[0]] > best_f:
            best_f, best_x = float(f[order[0]]), X[order[0]].copy()

        # steps measured from the clipped points keep the mean inside the box
        y_sel = (X[order[:mu]] - mean) / sigma
        old = mean
        mean = old + sigma * (w @ y_sel)
        y_w = w @ y_sel
        inv_sqrt_c = (B / D) @ B.T
        ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt_c @ y_w)
        hsig = np.linalg.norm(ps) / math.sqrt(1 - (1 - cs) ** (2 * (gen + 1))) / chi_n < 1.4 + 2 / (n + 1)
        pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * y_w
        C = (
            (1 - c1 - cmu) * C
            + c1 * (np.outer(pc, pc) + (1 - hsig) * cc * (2 - cc) * C)
            + cmu * (y_sel.T * w) @ y_sel
        )
        sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))
        sigma = min(sigma, 1.0)
        if gen % eigen_every == 0:
            C = 0.5 * (C + C.T)
            evals_c, B = np.linalg.eigh(C)
            D = np.sqrt(np.maximum(evals_c, 1e-20))

        history.append(f[order[0]])
        if sigma * D.max() < tol_x:
            break
        if len(history) > 10 + int(30 * n / lam):
            recent = history[-(10 + int(30 * n / lam)):]
            if max(recent) - min(recent) < tol_fun and f[order[0]] - f[order[-1]] < tol_fun:
                break
    return best_x, best_f, evals


def maximize(score, dimension, config=None, rng=None, reference=None):
    """Maximize a vectorized ``score`` (rows of an ``(m, d)`` array) over ``[0, 1]^d``.

    Returns
    -------
    MaximizeResult
        ``flat`` is set when neither the reference sample nor any CMA-ES run
        found two distinct score values, e.g. a landscape zeroed everywhere
        by constraint indicators.

    ``reference`` replaces the uniform reference sample when the caller has
    already drawn (and perhaps scored) one.
    """
    config = config or CmaEsConfig()
    rng = np.random.default_rng(config.seed if rng is None else rng)
    d = int(dimension)
    ref = rng.random((config.reference_samples, d)) if reference is None else np.atleast_2d(reference)
    ref_f = np.asarray(score(ref), dtype=float)
    ref_f = np.where(np.isfinite(ref_f), ref_f, -math.inf)
    i_best = int(np.argmax(ref_f))
    best_x, best_f = ref[i_best].copy(), float(ref_f[i_best])
    evals = ref.shape[0]
    lo_seen = float(np.min(ref_f))

    lam = config.popsize(d)
    gens = config.generations(d)
    for k in range(1 + max(config.restarts, 0)):
        start = best_x.copy() if k == 0 else rng.random(d)
        x, f, e = _cma_run(score, start, config.initial_sigma, lam * 2 ** k, gens, rng,
                           config.tol_x, config.tol_fun)
        evals += e
        if f > best_f:
            best_x, best_f = x, f
        lo_seen = min(lo_seen, f)

    # local polish around the incumbent
    x, f, e = _cma_run(score, best_x.copy(), config.polish_sigma, lam, gens, rng,
                       config.tol_x, config.tol_fun)
    evals += e
    if f > best_f:
        best_x, best_f = x, f

    flat = not (best_f > lo_seen)
    return MaximizeResult(best_x, best_f, flat, evals)
