"""Adaptive defect mapping on 2-D material surfaces.

Level-set estimation with Gaussian-process regression: an active-learning
loop classifies grid points as above/below a threshold from 95% credible
intervals and spends measurements where the surface straddles it. Instance
transfer reuses a previously measured surface, optionally after estimating a
location-scale shift between the two.
"""

__version__ = "0.1.0"

from .backend import backend_name
from .data import GridMap, NoisyOracle, load_grid_csv, synth_map, write_grid_csv
from .engine import (CredibleInterval, LevelSetPartition, SessionConfig,
                     SessionState, classify_all, initialize_session,
                     ingest_measurement, run_batch, select_next, straddle,
                     violation)
from .gp import (GpPosterior, KernelParams, LabeledDataset, fit, kernel_eval,
                 predict, predict_prior, select_hyperparameters)
from .grid import GridDomain
from .metrics import (ConfusionCounts, auc, confusion, cost_sensitive,
                      mann_whitney_auc, metric_row, risk_sensitive)
from .transfer import (SourceDataset, TransformedDataset, augment,
                       diff_gp_transform, lss_diff_gp_transform, lss_fit)

__all__ = [
    "__version__",
    "backend_name",
    "GridMap", "NoisyOracle", "load_grid_csv", "synth_map", "write_grid_csv",
    "CredibleInterval", "LevelSetPartition", "SessionConfig", "SessionState",
    "classify_all", "initialize_session", "ingest_measurement", "run_batch",
    "select_next", "straddle", "violation",
    "GpPosterior", "KernelParams", "LabeledDataset", "fit", "kernel_eval",
    "predict", "predict_prior", "select_hyperparameters",
    "GridDomain",
    "ConfusionCounts", "auc", "confusion", "cost_sensitive",
    "mann_whitney_auc", "metric_row", "risk_sensitive",
    "SourceDataset", "TransformedDataset", "augment", "diff_gp_transform",
    "lss_diff_gp_transform", "lss_fit",
]
