"""Instance transfer from a previously measured surface.

The difference between target and source functions is modeled with a GP on
the target residuals; source observations are then relabeled as pseudo-target
data with inflated per-point noise. A location-scale variant first estimates
an affine shift (gamma, eta) between the surfaces by least squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gp
from .data import GridMap
from .errors import EmptyTarget, InvalidConfig

# Variance of the source posterior mean over target points below this is
# treated as unidentifiable for the scale parameter.
DEGENERATE_VARIANCE = 1e-12

LSS_BASE_MODES = ("shifted", "raw")


@dataclass(frozen=True)
class SourceDataset:
    """Full source-domain measurements plus the posterior fitted on them."""

    data: gp.LabeledDataset
    posterior: gp.GpPosterior
    variances_at_points: np.ndarray  # source predictive variance at its own points

    def __post_init__(self):
        if len(self.data) < 1:
            raise InvalidConfig("source dataset must contain at least one pair")

    @property
    def points(self) -> np.ndarray:
        return self.data.points

    @property
    def values(self) -> np.ndarray:
        return self.data.values

    @classmethod
    def build(cls, points, values, params: gp.KernelParams | None = None,
              thin_every: int = 1) -> "SourceDataset":
        """Fit the source posterior; hyperparameters are grid-selected when
        not supplied. ``thin_every`` keeps every k-th pair (cost control)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(values, dtype=float).ravel()
        if thin_every > 1:
            points = points[::thin_every]
            values = values[::thin_every]
        data = gp.LabeledDataset(points, values)
        if params is None:
            span = points.max(axis=0) - points.min(axis=0)
            diagonal = float(np.hypot(*span)) or 1.0
            params = gp.select_hyperparameters(
                data, gp.default_search_grid(values, diagonal))
        posterior = gp.fit(params, data)
        _, variances = posterior.predict_batch(points)
        return cls(data=data, posterior=posterior, variances_at_points=variances)

    @classmethod
    def from_grid_map(cls, grid_map: GridMap, params: gp.KernelParams | None = None,
                      thin_every: int = 1) -> "SourceDataset":
        return cls.build(grid_map.domain.all_points(), grid_map.values,
                         params=params, thin_every=thin_every)


@dataclass(frozen=True)
class TransformedDataset:
    """Source pairs relabeled as pseudo-target data.

    ``source_variances`` is the extra per-point noise the transformed pairs
    carry into downstream fits (on top of the target noise variance), so a
    transferred point is never claimed more reliable than a direct one.
    """

    points: np.ndarray
    values: np.ndarray
    source_variances: np.ndarray
    target_noise_variance: float
    shift_params: tuple[float, float] = (1.0, 0.0)
    degenerate_shift: bool = False

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def per_point_noise(self) -> np.ndarray:
        """Total noise variance per transformed point."""
        return self.target_noise_variance + self.source_variances


@dataclass(frozen=True)
class LssEstimate:
    """Least-squares location-scale fit; degenerate when the scale is
    unidentifiable (constant source mean over the target points)."""

    gamma: float
    eta: float
    degenerate: bool = False


def _difference_transform(target_data: gp.LabeledDataset, source: SourceDataset,
                          params: gp.KernelParams, gamma: float, eta: float,
                          base: str, degenerate: bool) -> TransformedDataset:
    if len(target_data) == 0:
        raise EmptyTarget("difference model needs at least one target observation")
    if base not in LSS_BASE_MODES:
        raise InvalidConfig(f"lss_base must be one of {LSS_BASE_MODES}, got {base!r}")

    mu_src, var_src = source.posterior.predict_batch(target_data.points)
    residuals = target_data.values - (gamma * mu_src + eta)
    diff_data = gp.LabeledDataset(
        target_data.points, residuals,
        extra_noise=var_src + target_data.extra_noise_or_zeros())
    diff_posterior = gp.fit(params, diff_data)
    mu_hat, _ = diff_posterior.predict_batch(source.points)

    if base == "shifted":
        base_values = gamma * source.values + eta
    else:
        base_values = source.values
    return TransformedDataset(
        points=source.points.copy(),
        values=base_values + mu_hat,
        source_variances=source.variances_at_points.copy(),
        target_noise_variance=params.noise_variance,
        shift_params=(gamma, eta),
        degenerate_shift=degenerate,
    )


def diff_gp_transform(target_data: gp.LabeledDataset, source: SourceDataset,
                      params: gp.KernelParams) -> TransformedDataset:
    """Plain Diff-GP: relabel source pairs as y' + mu_hat(x') where mu_hat is
    the GP posterior mean of the target-minus-source residuals."""
    return _difference_transform(target_data, source, params,
                                 gamma=1.0, eta=0.0, base="raw", degenerate=False)


def source_copy_transform(source: SourceDataset,
                          params: gp.KernelParams) -> TransformedDataset:
    """Zero-target degenerate path: the difference prior is zero mean, so the
    source pairs pass through unchanged (still carrying inflated noise)."""
    return TransformedDataset(
        points=source.points.copy(),
        values=source.values.copy(),
        source_variances=source.variances_at_points.copy(),
        target_noise_variance=params.noise_variance,
        shift_params=(1.0, 0.0),
        degenerate_shift=False,
    )


def lss_fit(target_data: gp.LabeledDataset, source: SourceDataset) -> LssEstimate:
    """Closed-form OLS of target values on the source posterior mean.

    Returns a flagged identity-scale estimate (eta = mean residual) when the
    source mean is constant over the target points or fewer than 2 points
    exist.
    """
    mu_src, _ = source.posterior.predict_batch(target_data.points)
    y = target_data.values
    n = y.shape[0]
    if n == 0:
        return LssEstimate(1.0, 0.0, degenerate=True)
    var_mu = float(np.var(mu_src))
    if n < 2 or var_mu < DEGENERATE_VARIANCE:
        return LssEstimate(1.0, float(np.mean(y - mu_src)), degenerate=True)
    mu_bar, y_bar = float(np.mean(mu_src)), float(np.mean(y))
    cov = float(np.mean((mu_src - mu_bar) * (y - y_bar)))
    gamma = cov / var_mu
    eta = y_bar - gamma * mu_bar
    return LssEstimate(gamma, eta, degenerate=False)


def lss_diff_gp_transform(target_data: gp.LabeledDataset, source: SourceDataset,
                          params: gp.KernelParams, base: str = "shifted",
                          shift_override: tuple[float, float] | None = None,
                          ) -> TransformedDataset:
    """Diff-GP after estimating the location-scale shift.

    ``base`` picks what mu_hat is added to: the shifted source observation
    (default) or the raw one. A degenerate shift fit falls back to the plain
    Diff-GP transform. ``shift_override`` bypasses estimation (testing seam).
    """
    if len(target_data) == 0:
        raise EmptyTarget("location-scale fit needs target observations")
    if shift_override is not None:
        gamma, eta = shift_override
        return _difference_transform(target_data, source, params,
                                     gamma=gamma, eta=eta, base=base,
                                     degenerate=False)
    estimate = lss_fit(target_data, source)
    if estimate.degenerate:
        out = _difference_transform(target_data, source, params,
                                    gamma=1.0, eta=0.0, base=base, degenerate=True)
        return out
    return _difference_transform(target_data, source, params,
                                 gamma=estimate.gamma, eta=estimate.eta,
                                 base=base, degenerate=False)


def augment(target_data: gp.LabeledDataset,
            transformed: TransformedDataset | None) -> gp.LabeledDataset:
    """Concatenate target data (first) with transformed source pairs,
    preserving per-point noise."""
    if transformed is None or len(transformed) == 0:
        return target_data
    if len(target_data) == 0:
        return gp.LabeledDataset(transformed.points, transformed.values,
                                 extra_noise=transformed.source_variances)
    points = np.vstack([target_data.points, transformed.points])
    values = np.concatenate([target_data.values, transformed.values])
    extra = np.concatenate([target_data.extra_noise_or_zeros(),
                            transformed.source_variances])
    return gp.LabeledDataset(points, values, extra_noise=extra)
