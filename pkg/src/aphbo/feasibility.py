"""GP classifier for unknown constraints.

A GP regression is fitted to labels encoded as +1 (feasible) / -1
(infeasible) and its latent posterior is squashed through a probit link.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .gp import KernelFamily, KernelSpec, fit_hyperparameters, gp_fit

DEFAULT_LABEL_NOISE = 0.1


@dataclass(frozen=True, eq=False)
class FeasibilityModel:
    """Probability of feasibility plus latent variance.

    ``gp`` is None until an infeasible label has been seen; in that state the
    model reports certain feasibility and zero variance.
    """

    gp: object = None

    @property
    def active(self):
        return self.gp is not None

    def latent(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.gp is None:
            return np.ones(X.shape[0]), np.zeros(X.shape[0])
        return self.gp.predict(X)

    def prob_feasible(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.gp is None:
            return np.ones(X.shape[0])
        mean, var = self.gp.predict(X)
        return ndtr(mean / np.sqrt(var + 1.0))

    def prob_infeasible(self, X):
        return 1.0 - self.prob_feasible(X)

    def classification_variance(self, X):
        return self.latent(X)[1]


def encode_labels(labels):
    return np.where(np.asarray(labels, dtype=bool), 1.0, -1.0)


def fit_feasibility(
    inputs,
    labels,
    *,
    family=KernelFamily.MATERN52,
    noise_variance=DEFAULT_LABEL_NOISE,
    spec=None,
    rng=None,
    n_starts=8,
):
    """Fit the label GP; pass ``spec`` to skip the hyperparameter search.

    Returns an inactive model when every label is feasible.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    labels = np.asarray(labels, dtype=bool).ravel()
    if labels.size < 1:
        raise ValueError("need at least one labelled point")
    if labels.all():
        return FeasibilityModel(None)
    targets = encode_labels(labels)
    if spec is None:
        spec = fit_hyperparameters(
            X, targets, family, noise_variance=noise_variance, prior_mean=0.0,
            n_starts=n_starts, rng=rng,
        )
    return FeasibilityModel(gp_fit(X, targets, spec, noise_variance, prior_mean=0.0))


def prob_feasible(model, x):
    return float(model.prob_feasible(np.asarray(x, dtype=float)[None, :])[0])


def classification_variance(model, x):
    return float(model.classification_variance(np.asarray(x, dtype=float)[None, :])[0])

