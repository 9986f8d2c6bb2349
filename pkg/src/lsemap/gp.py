"""Exact Gaussian-process regression with an RBF kernel.

Supports heteroscedastic per-point noise (needed by instance transfer), an
optional prior mean attached to the training points, and marginal-likelihood
grid selection of hyperparameters. Predictive variance uses the subtraction
form ``k(x,x) - k(x)^T (K + D)^{-1} k(x)`` clamped to ``[0, v]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import backend
from .errors import FactorizationFailure, InvalidConfig

# Jitter added to the Gram diagonal, relative to the amplitude; escalates
# tenfold per retry. Dense RBF Gram matrices on grids are ill-conditioned.
JITTER_LADDER = (1e-9, 1e-8, 1e-7, 1e-6, 1e-5)


@dataclass(frozen=True)
class KernelParams:
    """RBF kernel hyperparameters plus the observation noise variance."""

    amplitude: float
    length_scale: float
    noise_variance: float = 0.0

    def __post_init__(self):
        if not (self.amplitude > 0):
            raise InvalidConfig(f"amplitude must be > 0, got {self.amplitude}")
        if not (self.length_scale > 0):
            raise InvalidConfig(f"length_scale must be > 0, got {self.length_scale}")
        if not (self.noise_variance >= 0):
            raise InvalidConfig(f"noise_variance must be >= 0, got {self.noise_variance}")


def kernel_eval(params: KernelParams, a, b) -> float:
    """Evaluate v * exp(-||a - b||^2 / (2 l^2)) for two positions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sq = float(np.sum((a - b) ** 2))
    return params.amplitude * math.exp(-sq / (2.0 * params.length_scale**2))


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered measurement pairs with optional per-point extra noise.

    ``extra_noise`` holds additional *variance* per observation on top of the
    kernel's scalar ``noise_variance`` — the transfer module stores the source
    posterior variance there.
    """

    points: np.ndarray
    values: np.ndarray
    extra_noise: np.ndarray | None = None

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        if points.shape[0] != values.shape[0]:
            raise InvalidConfig(
                f"points ({points.shape[0]}) and values ({values.shape[0]}) differ in length"
            )
        if self.extra_noise is not None:
            extra = np.asarray(self.extra_noise, dtype=float).ravel()
            if extra.shape[0] != values.shape[0]:
                raise InvalidConfig("extra_noise length does not match values")
            if np.any(extra < 0):
                raise InvalidConfig("extra_noise must be non-negative")
            object.__setattr__(self, "extra_noise", extra)

    def __len__(self) -> int:
        return self.values.shape[0]

    def extra_noise_or_zeros(self) -> np.ndarray:
        if self.extra_noise is None:
            return np.zeros(len(self))
        return self.extra_noise


@dataclass(frozen=True)
class GpPosterior:
    """Fitted GP state: Cholesky factor of (K + D) and dual weights.

    Immutable once constructed; safe to query from many threads.
    """

    params: KernelParams
    training: LabeledDataset
    chol: np.ndarray
    dual_weights: np.ndarray
    prior_mean_at_points: np.ndarray
    jitter: float
    _prior_lookup: dict | None = field(default=None, repr=False)

    def _prior_extension(self, x: np.ndarray) -> np.ndarray:
        """Prior mean at query points: stored value at an exact training
        coordinate match, zero everywhere else."""
        if self._prior_lookup is None:
            return np.zeros(x.shape[0])
        return np.array(
            [self._prior_lookup.get(tuple(row), 0.0) for row in x], dtype=float
        )

    def predict(self, x) -> tuple[float, float]:
        """Posterior mean and variance at a single position."""
        mean, var = self.predict_batch(np.atleast_2d(np.asarray(x, dtype=float)))
        return float(mean[0]), float(var[0])

    def predict_batch(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at each row of ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        kxn = backend.rbf_cross(x, self.training.points, self.params.amplitude,
                                self.params.length_scale)
        mean = kxn @ self.dual_weights + self._prior_extension(x)
        t = solve_triangular(self.chol, kxn.T, lower=True)
        var = self.params.amplitude - np.einsum("ij,ij->j", t, t)
        np.clip(var, 0.0, self.params.amplitude, out=var)
        return mean, var

    def log_marginal_likelihood(self) -> float:
        residual = self.training.values - self.prior_mean_at_points
        n = len(self.training)
        return float(
            -0.5 * residual @ self.dual_weights
            - np.sum(np.log(np.diag(self.chol)))
            - 0.5 * n * math.log(2.0 * math.pi)
        )


def fit(params: KernelParams, data: LabeledDataset,
        prior_mean: np.ndarray | None = None) -> GpPosterior:
    """Factorize the regularized Gram matrix and solve the dual weights.

    Raises FactorizationFailure if the matrix stays numerically indefinite
    through the whole jitter ladder.
    """
    n = len(data)
    if n == 0:
        raise InvalidConfig("fit requires a non-empty dataset")
    if prior_mean is None:
        prior = np.zeros(n)
    else:
        prior = np.asarray(prior_mean, dtype=float).ravel()
        if prior.shape[0] != n:
            raise InvalidConfig("prior_mean length does not match dataset")

    diag = params.noise_variance + data.extra_noise_or_zeros()
    chol = None
    used_jitter = 0.0
    for rel in JITTER_LADDER:
        jitter = rel * params.amplitude
        gram = backend.rbf_gram(data.points, params.amplitude, params.length_scale,
                                diag + jitter)
        try:
            chol = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            continue
        used_jitter = jitter
        break
    if chol is None:
        raise FactorizationFailure(
            f"Gram matrix not positive definite after jitter up to "
            f"{JITTER_LADDER[-1] * params.amplitude:g} (n={n}, params={params})"
        )

    residual = data.values - prior
    dual = cho_solve((chol, True), residual)
    lookup = None
    if prior_mean is not None:
        lookup = {}
        for row, m in zip(data.points, prior):
            lookup.setdefault(tuple(row), float(m))
    return GpPosterior(
        params=params,
        training=data,
        chol=chol,
        dual_weights=dual,
        prior_mean_at_points=prior,
        jitter=used_jitter,
        _prior_lookup=lookup,
    )


def predict(model: GpPosterior, x) -> tuple[float, float]:
    """Posterior mean and variance at one position (see GpPosterior.predict)."""
    return model.predict(x)


def predict_prior(params: KernelParams, x) -> tuple[float, float]:
    """Zero-data path: the GP prior has mean 0 and variance v everywhere."""
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        return 0.0, params.amplitude
    return np.zeros(x.shape[0]), np.full(x.shape[0], params.amplitude)


def log_marginal_likelihood(params: KernelParams, data: LabeledDataset) -> float:
    """Exact GP log marginal likelihood of ``data`` under ``params``."""
    return fit(params, data).log_marginal_likelihood()


def select_hyperparameters(data: LabeledDataset,
                           search_grid: list[KernelParams]) -> KernelParams:
    """Pick the grid element maximizing the log marginal likelihood.

    Candidates whose factorization fails are skipped; ties keep the first
    occurrence in grid order. Raises FactorizationFailure only if every
    candidate fails.
    """
    if len(data) < 2:
        raise InvalidConfig("hyperparameter selection needs at least 2 points")
    if not search_grid:
        raise InvalidConfig("search_grid must be non-empty")
    best: KernelParams | None = None
    best_lml = -math.inf
    for candidate in search_grid:
        try:
            lml = log_marginal_likelihood(candidate, data)
        except FactorizationFailure:
            continue
        if lml > best_lml:
            best, best_lml = candidate, lml
    if best is None:
        raise FactorizationFailure("every hyperparameter candidate failed to factorize")
    return best


# Relative factors of the default log-spaced search grid.
AMPLITUDE_FACTORS = (0.25, 1.0, 4.0)
LENGTH_SCALE_FRACTIONS = (0.025, 0.05, 0.10, 0.20, 0.40)
NOISE_FRACTIONS = (0.001, 0.01, 0.10)


def default_search_grid(values: np.ndarray, domain_diagonal: float) -> list[KernelParams]:
    """Build the default grid: amplitudes around the sample variance, length
    scales as fractions of the domain diagonal, noise as variance fractions."""
    values = np.asarray(values, dtype=float)
    base_var = float(np.var(values)) if values.size >= 2 else 0.0
    if base_var <= 0.0:
        base_var = 1.0  # constant observations: any positive amplitude works
    grid = []
    for af in AMPLITUDE_FACTORS:
        for lf in LENGTH_SCALE_FRACTIONS:
            for nf in NOISE_FRACTIONS:
                grid.append(KernelParams(
                    amplitude=af * base_var,
                    length_scale=lf * domain_diagonal,
                    noise_variance=nf * base_var,
                ))
    return grid
