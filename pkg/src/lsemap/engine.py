"""Active-learning level-set estimation loop.

Each step: fit the GP posterior on everything measured so far (augmented with
transformed source data when a transfer strategy is active), classify grid
points whose 95% credible interval cleared the threshold, then suggest the
unmeasured point maximizing the straddle score. Classification is sticky by
default: once a point leaves the undetermined set it never returns.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import gp, metrics, transfer
from .baselines import RectQueue, nonadaptive_next, random_next
from .errors import (DuplicateMeasurement, Exhausted, InvalidConfig,
                     OffGridIndex, ValueNotFinite)
from .grid import GridDomain
from .sweep import PosteriorSweep

CREDIBLE_Z = 1.96  # 95% credible half-width multiplier

STRATEGIES = ("al", "atl", "lss-atl", "random", "non-adaptive")
TRANSFER_STRATEGIES = ("atl", "lss-atl")


@dataclass(frozen=True)
class CredibleInterval:
    """Symmetric 95% credible interval of the posterior at one point."""

    mean: float
    sd: float

    @property
    def halfwidth(self) -> float:
        return CREDIBLE_Z * self.sd

    @property
    def lower(self) -> float:
        return self.mean - self.halfwidth

    @property
    def upper(self) -> float:
        return self.mean + self.halfwidth


def straddle(interval: CredibleInterval, theta: float) -> float:
    """Acquisition score 1.96*sd - |mean - theta|; may be negative."""
    return interval.halfwidth - abs(interval.mean - theta)


def violation(interval: CredibleInterval, theta: float) -> float:
    """min(max(0, theta - lower), max(0, upper - theta)): the smaller
    overhang of the interval across the threshold."""
    return min(max(0.0, theta - interval.lower), max(0.0, interval.upper - theta))


def straddle_scores(mu: np.ndarray, sd: np.ndarray, theta: float) -> np.ndarray:
    return CREDIBLE_Z * sd - np.abs(mu - theta)


@dataclass(frozen=True)
class LevelSetPartition:
    """Three-way split of grid indices: upper (1), lower (-1), undetermined (0)."""

    theta: float
    epsilon: float
    labels: np.ndarray

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidConfig("epsilon must be >= 0")
        object.__setattr__(self, "labels",
                           np.asarray(self.labels, dtype=np.int8))

    @classmethod
    def all_undetermined(cls, theta: float, epsilon: float, n: int) -> "LevelSetPartition":
        return cls(theta, epsilon, np.zeros(n, dtype=np.int8))

    @property
    def n_points(self) -> int:
        return self.labels.shape[0]

    def upper_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == metrics.LABEL_UPPER)

    def lower_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == metrics.LABEL_LOWER)

    def undetermined_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == metrics.LABEL_UNDETERMINED)

    def counts(self) -> tuple[int, int, int]:
        """(n_upper, n_lower, n_undetermined)."""
        return (int(np.sum(self.labels == metrics.LABEL_UPPER)),
                int(np.sum(self.labels == metrics.LABEL_LOWER)),
                int(np.sum(self.labels == metrics.LABEL_UNDETERMINED)))

    def updated(self, mu: np.ndarray, sd: np.ndarray,
                sticky: bool = True) -> "LevelSetPartition":
        """Apply the credible-interval classification rules.

        Upper wins when both rules fire (possible for epsilon > 1.96*sd);
        sticky mode only ever moves points out of the undetermined set.
        """
        lower_end = mu - CREDIBLE_Z * sd
        upper_end = mu + CREDIBLE_Z * sd
        to_upper = lower_end + self.epsilon >= self.theta
        to_lower = (upper_end - self.epsilon < self.theta) & ~to_upper
        if sticky:
            labels = self.labels.copy()
            undecided = labels == metrics.LABEL_UNDETERMINED
            labels[undecided & to_upper] = metrics.LABEL_UPPER
            labels[undecided & to_lower] = metrics.LABEL_LOWER
        else:
            labels = np.zeros_like(self.labels)
            labels[to_upper] = metrics.LABEL_UPPER
            labels[to_lower] = metrics.LABEL_LOWER
        return replace(self, labels=labels)


def classify_all(model: gp.GpPosterior, domain: GridDomain,
                 partition: LevelSetPartition,
                 sticky: bool = True) -> LevelSetPartition:
    """Classify every candidate point from the model's credible intervals."""
    mu, var = model.predict_batch(domain.all_points())
    return partition.updated(mu, np.sqrt(var), sticky=sticky)


def select_next(model: gp.GpPosterior, domain: GridDomain,
                measured_indices, theta: float) -> int:
    """Unmeasured index maximizing the straddle; ties break to the lowest
    index. Raises Exhausted when everything is measured."""
    mu, var = model.predict_batch(domain.all_points())
    return _select_from_stats(mu, np.sqrt(var), measured_indices, theta)


def _select_from_stats(mu: np.ndarray, sd: np.ndarray, measured_indices,
                       theta: float) -> int:
    scores = straddle_scores(mu, sd, theta)
    measured = list(measured_indices)
    if len(measured) >= scores.shape[0]:
        raise Exhausted("all grid points measured")
    if measured:
        scores[np.asarray(measured, dtype=int)] = -np.inf
    return int(np.argmax(scores))


@dataclass(frozen=True)
class SessionConfig:
    """Everything that determines a session's trajectory besides the values
    fed to it."""

    theta: float
    strategy: str = "al"
    epsilon: float = 0.0
    max_iterations: int | None = None  # None: grid size
    seed: int = 0
    init_random_k: int | None = None  # None: 3 for GP strategies, 0 for baselines
    init_indices: tuple[int, ...] | None = None
    kernel: gp.KernelParams | None = None  # None: marginal-likelihood grid selection
    hyper_refit_every: int = 10
    sticky_classification: bool = True
    lss_base: str = "shifted"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidConfig(f"unknown strategy {self.strategy!r}; expected {STRATEGIES}")
        if not np.isfinite(self.theta):
            raise InvalidConfig("theta must be finite")
        if self.epsilon < 0:
            raise InvalidConfig("epsilon must be >= 0")
        if self.lss_base not in transfer.LSS_BASE_MODES:
            raise InvalidConfig(f"lss_base must be one of {transfer.LSS_BASE_MODES}")
        if self.hyper_refit_every < 1:
            raise InvalidConfig("hyper_refit_every must be >= 1")

    def effective_init_k(self) -> int:
        if self.init_random_k is not None:
            return self.init_random_k
        return 0 if self.strategy in ("random", "non-adaptive") else 3


@dataclass(frozen=True)
class MeasurementRecord:
    step: int
    index: int
    value: float
    deviated: bool  # measured somewhere other than the current suggestion


@dataclass(frozen=True)
class StepSnapshot:
    """Per-step record kept by run_batch for metric curves."""

    step: int
    n_measured: int
    labels: np.ndarray
    counts: tuple[int, int, int]
    measured_index: int | None
    measured_value: float | None
    metrics: metrics.MetricRow | None = None


# Fallback hyperparameters used before the first grid selection is possible
# (single observation, automatic mode): wide amplitude so nothing classifies
# off one point.
def _provisional_params(values: np.ndarray, diagonal: float) -> gp.KernelParams:
    scale = max(1.0, float(np.max(np.abs(values))) ** 2)
    amplitude = 4.0 * scale
    return gp.KernelParams(amplitude=amplitude, length_scale=0.1 * diagonal,
                           noise_variance=0.01 * amplitude)


class SessionState:
    """Mutable session: one measurement loop over one grid.

    Mutations (ingest_measurement) must be serialized by the caller; reads of
    a quiescent session are safe from any thread.
    """

    def __init__(self, domain: GridDomain, config: SessionConfig,
                 source: transfer.SourceDataset | None = None):
        if config.strategy in TRANSFER_STRATEGIES and source is None:
            raise InvalidConfig(f"strategy {config.strategy!r} requires a source dataset")
        self.domain = domain
        self.config = config
        self.source = source
        self.rng = np.random.default_rng(config.seed)
        self.max_iterations = (config.max_iterations if config.max_iterations is not None
                               else domain.n_points)

        self.measured_indices: list[int] = []
        self.measured_values: list[float] = []
        self.measured_set: set[int] = set()
        self.log: list[MeasurementRecord] = []
        self.t = 0
        self.partition = LevelSetPartition.all_undetermined(
            config.theta, config.epsilon, domain.n_points)
        self.params: gp.KernelParams | None = config.kernel
        self._params_selected = config.kernel is not None
        self.grid_mu: np.ndarray | None = None
        self.grid_sd: np.ndarray | None = None
        self._grid_points = domain.all_points()
        self._sweep = PosteriorSweep(self._grid_points)
        self._model: gp.GpPosterior | None = None
        self._train_values: np.ndarray | None = None
        self._rect_queue = (RectQueue(domain)
                            if config.strategy == "non-adaptive" else None)
        self._nonadaptive_pending: int | None = None
        self.suggestion: int | None = None

        self.pending_init: deque[int] = deque(self._build_init_design())
        if self.source is not None and config.strategy in TRANSFER_STRATEGIES:
            self._refit()  # transfer sessions start with a source-informed model
        self._update_suggestion()

    # -- initialization ------------------------------------------------------

    def _build_init_design(self) -> list[int]:
        cfg = self.config
        n = self.domain.n_points
        if cfg.init_indices is not None:
            indices = [int(i) for i in cfg.init_indices]
            for i in indices:
                if not (0 <= i < n):
                    raise InvalidConfig(f"init index {i} outside grid of {n} points")
            if len(set(indices)) != len(indices):
                raise InvalidConfig("init_indices contains duplicates")
            return indices
        k = cfg.effective_init_k()
        if k > n:
            raise InvalidConfig(f"init_random_k={k} exceeds grid size {n}")
        if k == 0:
            return []
        return [int(i) for i in self.rng.choice(n, size=k, replace=False)]

    # -- status --------------------------------------------------------------

    @property
    def converged(self) -> bool:
        return int(np.sum(self.partition.labels == metrics.LABEL_UNDETERMINED)) == 0

    @property
    def status(self) -> str:
        if self.converged:
            return "converged"
        if self.t >= self.max_iterations or len(self.measured_set) >= self.domain.n_points:
            return "exhausted"
        return "active"

    # -- model refresh -------------------------------------------------------

    @property
    def model(self) -> gp.GpPosterior | None:
        """Posterior over the current training set (lazily materialized from
        the sweep cache; identical factorization, so identical predictions)."""
        if self._model is None and self._train_values is not None:
            self._model = self._sweep.as_posterior(self._train_values)
        return self._model

    def _target_dataset(self) -> gp.LabeledDataset:
        if self.measured_indices:
            points = self._grid_points[np.asarray(self.measured_indices, dtype=int)]
            return gp.LabeledDataset(points, np.asarray(self.measured_values))
        return gp.LabeledDataset(np.empty((0, 2)), np.empty(0))

    def _transform_source(self, target: gp.LabeledDataset) -> transfer.TransformedDataset:
        # The difference GP reuses the current target hyperparameters (or the
        # source's before the first selection).
        params = self.params if self.params is not None else self.source.posterior.params
        if len(target) == 0:
            return transfer.source_copy_transform(self.source, params)
        if self.config.strategy == "atl":
            return transfer.diff_gp_transform(target, self.source, params)
        return transfer.lss_diff_gp_transform(
            target, self.source, params, base=self.config.lss_base)

    def _training_data(self) -> gp.LabeledDataset:
        """Spec-ordered training set (target first, transformed source after);
        used for hyperparameter selection and external inspection."""
        target = self._target_dataset()
        if self.config.strategy not in TRANSFER_STRATEGIES or self.source is None:
            return target
        return transfer.augment(target, self._transform_source(target))

    def _maybe_select_params(self, values: np.ndarray) -> None:
        if self.config.kernel is not None:
            return
        # Selection runs on the schedule only (t = 0 occurs for transfer
        # sessions, which start with the full source sample). Off-schedule
        # steps keep the previous choice; before the first selection a wide
        # provisional kernel keeps the posterior honestly diffuse, since the
        # sample variance of a handful of points is not a usable scale.
        due = self.t % self.config.hyper_refit_every == 0
        if due and values.shape[0] >= 2:
            train = self._training_data()
            grid_candidates = gp.default_search_grid(train.values, self.domain.diagonal())
            self.params = gp.select_hyperparameters(train, grid_candidates)
            self._params_selected = True
        elif self.params is None:
            self.params = _provisional_params(values, self.domain.diagonal())

    def _refit(self) -> None:
        target = self._target_dataset()
        if self.config.strategy in TRANSFER_STRATEGIES and self.source is not None:
            transformed = self._transform_source(target)
            # Cache order keeps the fixed source block as a stable prefix so
            # the factorization grows by one row per target measurement.
            if len(target):
                points = np.vstack([transformed.points, target.points])
                extras = np.concatenate([transformed.source_variances,
                                         target.extra_noise_or_zeros()])
                values = np.concatenate([transformed.values, target.values])
            else:
                points = transformed.points
                extras = transformed.source_variances
                values = transformed.values
        else:
            if len(target) == 0:
                return
            points = target.points
            extras = target.extra_noise_or_zeros()
            values = target.values

        self._maybe_select_params(values)
        mu, sd, _, _ = self._sweep.update(self.params, points, extras, values)
        self.grid_mu, self.grid_sd = mu, sd
        self._train_values = values
        self._model = None
        self.partition = self.partition.updated(
            self.grid_mu, self.grid_sd, sticky=self.config.sticky_classification)

    # -- suggestion ----------------------------------------------------------

    def _update_suggestion(self) -> None:
        self.suggestion = self._compute_suggestion()

    def _compute_suggestion(self) -> int | None:
        if self.status != "active":
            return None
        while self.pending_init:
            idx = self.pending_init[0]
            if idx in self.measured_set:
                self.pending_init.popleft()
                continue
            return idx
        strategy = self.config.strategy
        try:
            if strategy == "random":
                return random_next(self.domain, self.measured_set, self.rng)
            if strategy == "non-adaptive":
                pending = self._nonadaptive_pending
                if pending is not None and pending not in self.measured_set:
                    return pending
                while True:
                    idx = nonadaptive_next(self._rect_queue, self.domain)
                    if idx not in self.measured_set:
                        self._nonadaptive_pending = idx
                        return idx
            # GP-guided strategies
            if self.grid_mu is None:
                center = self.domain.center_index()
                if center not in self.measured_set:
                    return center
                for idx in range(self.domain.n_points):
                    if idx not in self.measured_set:
                        return idx
                raise Exhausted("all grid points measured")
            return _select_from_stats(self.grid_mu, self.grid_sd,
                                      self.measured_set, self.config.theta)
        except Exhausted:
            return None

    # -- mutation ------------------------------------------------------------

    def ingest(self, index: int, value: float) -> "SessionState":
        """Record one measurement, refit, reclassify, and advance one step."""
        if self.status != "active":
            raise Exhausted(f"session is {self.status}; no further measurements accepted")
        index = int(index)
        if not (0 <= index < self.domain.n_points):
            raise OffGridIndex(f"index {index} outside grid of {self.domain.n_points} points")
        if index in self.measured_set:
            raise DuplicateMeasurement(f"index {index} already measured")
        value = float(value)
        if not np.isfinite(value):
            raise ValueNotFinite(f"measurement value must be finite, got {value}")

        deviated = self.suggestion is not None and index != self.suggestion
        self.measured_indices.append(index)
        self.measured_values.append(value)
        self.measured_set.add(index)
        self.t += 1
        self.log.append(MeasurementRecord(step=self.t, index=index,
                                          value=value, deviated=deviated))
        if self.pending_init and self.pending_init[0] == index:
            self.pending_init.popleft()
        self._refit()
        self._update_suggestion()
        return self

    # -- snapshots ------------------------------------------------------------

    def snapshot(self, truth: np.ndarray | None = None,
                 measured_index: int | None = None,
                 measured_value: float | None = None) -> StepSnapshot:
        row = None
        if truth is not None:
            mu = self.grid_mu if self.grid_mu is not None else np.zeros(self.domain.n_points)
            row = metrics.metric_row(self.t, len(self.measured_indices),
                                     self.partition.labels, mu, truth)
        return StepSnapshot(
            step=self.t,
            n_measured=len(self.measured_indices),
            labels=self.partition.labels.copy(),
            counts=self.partition.counts(),
            measured_index=measured_index,
            measured_value=measured_value,
            metrics=row,
        )


def initialize_session(domain: GridDomain, config: SessionConfig,
                       source: transfer.SourceDataset | None = None) -> SessionState:
    """Create a session with an all-undetermined partition and the configured
    initial design queued."""
    return SessionState(domain, config, source=source)


def ingest_measurement(state: SessionState, index: int, value: float) -> SessionState:
    """Feed one measurement into the session (see SessionState.ingest)."""
    return state.ingest(index, value)


def run_batch(state: SessionState, oracle, budget: int,
              truth: np.ndarray | None = None) -> list[StepSnapshot]:
    """Drive the loop with a measurement oracle until the undetermined set
    empties, the session exhausts, or ``budget`` acquisitions happen.

    Returns one snapshot per state (initial state included).
    """
    remaining_capacity = state.domain.n_points - len(state.measured_set)
    if budget > remaining_capacity:
        raise InvalidConfig(
            f"budget {budget} exceeds {remaining_capacity} unmeasured points")
    trajectory = [state.snapshot(truth=truth)]
    for _ in range(budget):
        if state.status != "active":
            break
        index = state.suggestion
        if index is None:
            break
        value = float(oracle(index))
        state.ingest(index, value)
        trajectory.append(state.snapshot(truth=truth, measured_index=index,
                                         measured_value=value))
    return trajectory
