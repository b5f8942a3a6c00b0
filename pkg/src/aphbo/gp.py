"""Gaussian-process regression with stationary Matern / squared-exponential kernels.

All inputs handed to this module are expected to live in the unit cube; the
scheduler maps problem domains onto ``[0, 1]^d`` before fitting, which is what
makes the default length-scale bounds problem independent.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

JITTER_START = 1e-10
JITTER_MAX = 1e-4
DUPLICATE_TOL = 1e-9
START_LENGTH_SCALES = (0.05, 5.0)
LOG_2PI = math.log(2.0 * math.pi)


class KernelFamily(str, enum.Enum):
    MATERN12 = "Matern12"
    MATERN32 = "Matern32"
    MATERN52 = "Matern52"
    SQUARED_EXPONENTIAL = "SquaredExponential"


class NumericalError(RuntimeError):
    """Raised when the covariance matrix cannot be factorized.

    Attributes
    ----------
    jitter : float
        The largest diagonal jitter that was attempted.
    """

    def __init__(self, message, jitter=float("nan")):
        super().__init__(message)
        self.jitter = jitter


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``length_scales`` divide coordinate differences, i.e.
    ``r^2 = sum(((a - b) / length_scales)**2)``.
    """

    family: KernelFamily
    signal_variance: float
    length_scales: tuple

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        object.__setattr__(
            self, "length_scales", tuple(float(v) for v in np.atleast_1d(self.length_scales))
        )
        if not self.signal_variance > 0:
            raise ValueError(f"signal_variance must be positive, got {self.signal_variance}")
        if any(not v > 0 for v in self.length_scales):
            raise ValueError(f"length scales must be positive, got {self.length_scales}")

    @property
    def dimension(self):
        return len(self.length_scales)

    def to_dict(self):
        return {
            "family": self.family.value,
            "signal_variance": float(self.signal_variance),
            "length_scales": list(self.length_scales),
        }


def _profile(r2, family):
    """Unit-variance correlation as a function of the squared scaled distance."""
    if family is KernelFamily.SQUARED_EXPONENTIAL:
        return np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    if family is KernelFamily.MATERN12:
        return np.exp(-r)
    if family is KernelFamily.MATERN32:
        s = math.sqrt(3.0) * r
        return (1.0 + s) * np.exp(-s)
    if family is KernelFamily.MATERN52:
        s = math.sqrt(5.0) * r
        return (1.0 + s + (5.0 / 3.0) * r2) * np.exp(-s)
    raise ValueError(f"unknown kernel family {family!r}")


def kernel_eval(a, b, spec):
    """Covariance between two single points."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.size != spec.dimension:
        raise ValueError(
            f"dimension mismatch: a has {a.size}, b has {b.size}, "
            f"kernel has {spec.dimension} length scales"
        )
    scales = np.asarray(spec.length_scales)
    r2 = float(np.sum(((a - b) / scales) ** 2))
    return float(spec.signal_variance * _profile(r2, spec.family))


def kernel_matrix(A, B, spec):
    """Cross-covariance matrix between the rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != spec.dimension or B.shape[1] != spec.dimension:
        raise ValueError(
            f"dimension mismatch: inputs have {A.shape[1]} / {B.shape[1]} columns, "
            f"kernel has {spec.dimension} length scales"
        )
    scales = np.asarray(spec.length_scales)
    r2 = cdist(A / scales, B / scales, "sqeuclidean")
    return spec.signal_variance * _profile(r2, spec.family)


def _cholesky_with_jitter(K, signal_variance):
    jitter = JITTER_START * signal_variance
    limit = JITTER_MAX * signal_variance * (1.0 + 1e-12)
    n = K.shape[0]
    while True:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n))
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > limit:
                raise NumericalError(
                    f"Cholesky failed for {n}x{n} covariance even with jitter {jitter / 10.0:.3g}",
                    jitter=jitter / 10.0,
                ) from None


@dataclass(frozen=True, eq=False)
class GpModel:
    """A fitted GP; immutable, so concurrent reads are safe.

    ``factor`` is the lower Cholesky factor of ``K + (noise_variance + jitter) I``
    and ``alpha`` solves that system against ``outputs - prior_mean``.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    kernel: KernelSpec
    noise_variance: float
    prior_mean: float
    factor: np.ndarray
    alpha: np.ndarray
    jitter: float

    @property
    def n(self):
        return self.inputs.shape[0]

    def predict(self, X, return_var=True):
        """Posterior mean (and variance) at each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Ks = kernel_matrix(self.inputs, X, self.kernel)
        mean = self.prior_mean + Ks.T @ self.alpha
        if not return_var:
            return mean
        V = solve_triangular(self.factor, Ks, lower=True, check_finite=False)
        var = self.kernel.signal_variance - np.einsum("ij,ij->j", V, V)
        return mean, np.maximum(var, 0.0)


def gp_fit(inputs, outputs, spec, noise_variance=0.0, prior_mean=None):
    """Factorize the training covariance and cache the weight vector.

    Parameters
    ----------
    inputs : (n, d) array
    outputs : (n,) array
    spec : KernelSpec
    noise_variance : float
        Observation noise added to the diagonal, on top of the jitter.
    prior_mean : float, optional
        Constant prior mean; defaults to the mean of ``outputs``.

    Raises
    ------
    NumericalError
        If the factorization fails at the largest jitter.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    if X.shape[0] < 1:
        raise ValueError("need at least one training point")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} inputs but {y.size} outputs")
    if noise_variance < 0:
        raise ValueError("noise_variance must be nonnegative")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("inputs and outputs must be finite")
    mu0 = float(np.mean(y)) if prior_mean is None else float(prior_mean)
    K = kernel_matrix(X, X, spec)
    K[np.diag_indices_from(K)] += noise_variance
    L, jitter = _cholesky_with_jitter(K, spec.signal_variance)
    z = solve_triangular(L, y - mu0, lower=True, check_finite=False)
    alpha = solve_triangular(L.T, z, lower=False, check_finite=False)
    return GpModel(
        inputs=X.copy(),
        outputs=y.copy(),
        kernel=spec,
        noise_variance=float(noise_variance),
        prior_mean=mu0,
        factor=L,
        alpha=alpha,
        jitter=jitter,
    )


def gp_predict(model, x):
    """Posterior mean and variance at a single point."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.inputs.shape[1]:
        raise ValueError(f"expected a {model.inputs.shape[1]}-vector, got {x.size}")
    mean, var = model.predict(x[None, :])
    return float(mean[0]), float(var[0])


def log_marginal_likelihood(model):
    resid = model.outputs - model.prior_mean
    return float(
        -0.5 * resid @ model.alpha
        - np.sum(np.log(np.diag(model.factor)))
        - 0.5 * model.n * LOG_2PI
    )


def merge_duplicates(inputs, outputs, tol=DUPLICATE_TOL):
    """Drop rows within ``tol`` of a later row, keeping the later output.

    Returns the filtered inputs, outputs and the kept row indices.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    n = X.shape[0]
    if n <= 1:
        return X, y, np.arange(n)
    D = cdist(X, X)
    keep = []
    for i in range(n):
        # a later row within tol supersedes this one
        if not np.any(D[i, i + 1:] <= tol):
            keep.append(i)
    keep = np.asarray(keep, dtype=int)
    return X[keep], y[keep], keep


@dataclass(frozen=True)
class HyperparameterBounds:
    """Box for the log-space hyperparameter search.

    ``signal_variance`` is relative to the output variance (or absolute when
    ``relative_signal`` is False).
    """

    length_scale: tuple = (1e-3, 1e3)
    signal_variance: tuple = (1e-3, 1e3)
    relative_signal: bool = True

    def __post_init__(self):
        for lo, hi in (self.length_scale, self.signal_variance):
            if not (0 < lo < hi < math.inf):
                raise ValueError(f"bounds must be finite positive intervals, got ({lo}, {hi})")


class _NegativeLml:
    """``-log p(y | theta)`` over log hyperparameters, reusing per-axis squared distances."""

    def __init__(self, X, y, family, noise_variance, prior_mean):
        self.family = family
        self.noise = noise_variance
        mu0 = float(np.mean(y)) if prior_mean is None else float(prior_mean)
        self.resid = y - mu0
        self.sq = (X[:, None, :] - X[None, :, :]) ** 2
        self.n = y.size

    def __call__(self, log_params):
        signal = math.exp(log_params[0])
        inv_l2 = np.exp(-2.0 * np.asarray(log_params[1:]))
        K = signal * _profile(self.sq @ inv_l2, self.family)
        K[np.diag_indices_from(K)] += self.noise
        try:
            L, _ = _cholesky_with_jitter(K, signal)
        except NumericalError:
            return math.inf
        z = solve_triangular(L, self.resid, lower=True, check_finite=False)
        value = 0.5 * z @ z + np.sum(np.log(np.diag(L))) + 0.5 * self.n * LOG_2PI
        return float(value) if math.isfinite(value) else math.inf


def fit_hyperparameters(
    inputs,
    outputs,
    family=KernelFamily.MATERN52,
    bounds=None,
    *,
    noise_variance=0.0,
    prior_mean=None,
    n_starts=8,
    max_evals=None,
    initial=None,
    rng=None,
):
    """Maximize the log marginal likelihood by multi-start Nelder-Mead in log space.

    Starts are ``initial`` when given (warm start), then a default centre
    (length scales 0.3, signal variance equal to the output variance), then
    log-uniform draws from a plausible sub-box of ``bounds`` (flat plateaus at
    extreme length scales trap a local search). Each start is refined by a
    bounded Nelder-Mead search and the best spec is returned.

    Raises
    ------
    NumericalError
        If every start fails to factorize.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(outputs, dtype=float).ravel()
    d = X.shape[1]
    bounds = bounds or HyperparameterBounds()
    family = KernelFamily(family)
    scale = 1.0
    if bounds.relative_signal:
        scale = float(np.var(y)) if y.size > 1 and np.var(y) > 0 else 1.0
    lo = np.log(np.r_[bounds.signal_variance[0] * scale, np.full(d, bounds.length_scale[0])])
    hi = np.log(np.r_[bounds.signal_variance[1] * scale, np.full(d, bounds.length_scale[1])])
    rng = np.random.default_rng(rng)

    centre = np.empty(d + 1)
    centre[0] = np.clip(math.log(scale), lo[0], hi[0])
    # a unit-range input box suggests O(0.1..1) length scales
    centre[1:] = np.clip(math.log(0.3), lo[1:], hi[1:])
    starts = [centre]
    if initial is not None:
        warm = np.clip(np.log(np.r_[initial.signal_variance, initial.length_scales]), lo, hi)
        starts.insert(0, warm)
    # random starts come from a plausible sub-box; the search itself may leave it
    start_lo = np.maximum(lo, np.log(np.r_[0.1 * scale, np.full(d, START_LENGTH_SCALES[0])]))
    start_hi = np.minimum(hi, np.log(np.r_[10.0 * scale, np.full(d, START_LENGTH_SCALES[1])]))
    start_lo = np.minimum(start_lo, start_hi)
    starts += [rng.uniform(start_lo, start_hi) for _ in range(max(n_starts - len(starts), 0))]
    max_evals = max_evals or 60 * (d + 1)

    objective = _NegativeLml(X, y, family, noise_variance, prior_mean)
    best_x, best_f = None, math.inf
    for x0 in starts:
        f0 = objective(x0)
        if f0 < best_f:
            best_x, best_f = x0, f0
        if not math.isfinite(f0):
            continue
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={"maxfev": max_evals, "xatol": 1e-3, "fatol": 1e-6},
        )
        if res.fun < best_f:
            best_x, best_f = np.clip(res.x, lo, hi), float(res.fun)
    if best_x is None or not math.isfinite(best_f):
        raise NumericalError("every hyperparameter start failed to factorize")
    return KernelSpec(family, math.exp(best_x[0]), np.exp(best_x[1:]))

