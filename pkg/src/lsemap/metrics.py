"""Ground-truth evaluation: the six-cell confusion table and the
risk-/cost-sensitive metric family.

Risk-sensitive metrics fold undetermined points into the defective side
(UP acts as a false negative, UN as a true negative); cost-sensitive metrics
fold them into the normal side (UP as a true positive, UN as a false
positive). Denominator-zero metrics are reported as None, never coerced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

# Per-point partition labels shared with the engine.
LABEL_LOWER = -1  # sub-level (defective)
LABEL_UNDETERMINED = 0
LABEL_UPPER = 1  # super-level (normal)

METRIC_CSV_HEADER = ("step,n_measured,sens_risk,spec_risk,f1_risk,auc_risk,"
                     "sens_cost,spec_cost,f1_cost,auc_cost")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    up: int
    fn: int
    fp: int
    un: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.up + self.fn + self.fp + self.un + self.tn


def confusion(partition, truth) -> ConfusionCounts:
    """Count the six cells of the prediction-vs-truth table.

    ``partition`` is either a label array (LABEL_* codes) or an object with a
    ``labels`` attribute; ``truth`` is a boolean positive-class array.
    """
    labels = np.asarray(getattr(partition, "labels", partition))
    truth = np.asarray(truth, dtype=bool)
    if labels.shape != truth.shape:
        raise ValueError("partition and truth sizes differ")
    upper = labels == LABEL_UPPER
    lower = labels == LABEL_LOWER
    undet = labels == LABEL_UNDETERMINED
    return ConfusionCounts(
        tp=int(np.sum(upper & truth)),
        up=int(np.sum(undet & truth)),
        fn=int(np.sum(lower & truth)),
        fp=int(np.sum(upper & ~truth)),
        un=int(np.sum(undet & ~truth)),
        tn=int(np.sum(lower & ~truth)),
    )


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def risk_sensitive(c: ConfusionCounts) -> tuple[float | None, float | None, float | None]:
    """(sensitivity, specificity, F1) treating undetermined as defective."""
    sens = _ratio(c.tp, c.tp + c.up + c.fn)
    spec = _ratio(c.tn + c.un, c.tn + c.fp + c.un)
    f1 = _ratio(2 * c.tp, 2 * c.tp + c.fp + (c.up + c.fn))
    return sens, spec, f1


def cost_sensitive(c: ConfusionCounts) -> tuple[float | None, float | None, float | None]:
    """(sensitivity, specificity, F1) treating undetermined as normal."""
    sens = _ratio(c.tp + c.up, c.tp + c.up + c.fn)
    spec = _ratio(c.tn, c.tn + c.fp + c.un)
    f1 = _ratio(2 * (c.tp + c.up), 2 * (c.tp + c.up) + (c.fp + c.un) + c.fn)
    return sens, spec, f1


def mann_whitney_auc(scores, truth) -> float | None:
    """Rank-based AUC of ``scores`` against boolean ``truth``; ties count 1/2.

    None when truth is single-class.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)
    rank_sum = float(ranks[truth].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc(scores, truth, mode: str, undetermined=None) -> float | None:
    """AUC with undetermined points ranked most-defective (risk mode) or
    most-normal (cost mode)."""
    if mode not in ("risk", "cost"):
        raise ValueError(f"mode must be 'risk' or 'cost', got {mode!r}")
    scores = np.asarray(scores, dtype=float).copy()
    if undetermined is not None:
        mask = np.asarray(undetermined, dtype=bool)
        scores[mask] = -np.inf if mode == "risk" else np.inf
    return mann_whitney_auc(scores, truth)


@dataclass(frozen=True)
class MetricRow:
    step: int
    n_measured: int
    sens_risk: float | None
    spec_risk: float | None
    f1_risk: float | None
    auc_risk: float | None
    sens_cost: float | None
    spec_cost: float | None
    f1_cost: float | None
    auc_cost: float | None

    def csv_fields(self) -> list[str]:
        out = [str(self.step), str(self.n_measured)]
        for v in (self.sens_risk, self.spec_risk, self.f1_risk, self.auc_risk,
                  self.sens_cost, self.spec_cost, self.f1_cost, self.auc_cost):
            out.append("" if v is None else repr(float(v)))
        return out


def metric_row(step: int, n_measured: int, labels, mu, truth) -> MetricRow:
    """All eight metrics for one step from the partition labels, the grid
    posterior mean, and the ground-truth labels."""
    labels = np.asarray(labels)
    counts = confusion(labels, truth)
    sens_r, spec_r, f1_r = risk_sensitive(counts)
    sens_c, spec_c, f1_c = cost_sensitive(counts)
    undet = labels == LABEL_UNDETERMINED
    return MetricRow(
        step=step, n_measured=n_measured,
        sens_risk=sens_r, spec_risk=spec_r, f1_risk=f1_r,
        auc_risk=auc(mu, truth, "risk", undetermined=undet),
        sens_cost=sens_c, spec_cost=spec_c, f1_cost=f1_c,
        auc_cost=auc(mu, truth, "cost", undetermined=undet),
    )


def write_metrics_csv(rows: list[MetricRow], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(METRIC_CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(row.csv_fields()) + "\n")
