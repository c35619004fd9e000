"""
Evaluation metrics for imputations, coefficients and predictions
"""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from utils.errors import ShapeMismatchError, UndefinedMetricError

logger = logging.getLogger(__name__)


class ConfusionCounts(BaseModel):
    tp: int = Field(ge=0)
    tn: int = Field(ge=0)
    fp: int = Field(ge=0)
    fn: int = Field(ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def _same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"Shapes differ: {a.shape} vs {b.shape}")


def imputation_l1(x_imputed: np.ndarray, x_true: np.ndarray, mask: np.ndarray) -> float:
    """Mean |x̂ − x| over masked entries"""
    x_imputed = np.asarray(x_imputed, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    mask = np.asarray(mask)
    _same_length(x_imputed, x_true)
    _same_length(x_imputed, mask)
    masked = mask == 0
    n_miss = int(masked.sum())
    if n_miss == 0:
        raise UndefinedMetricError("No masked entries to evaluate")
    return float(np.abs(x_imputed[masked] - x_true[masked]).sum() / n_miss)


def percent_bias(beta_hat: np.ndarray, beta_true: np.ndarray) -> float:
    """100 · mean_j |β_j − β̂_j| / |β_j|, intercept excluded"""
    beta_hat = np.asarray(beta_hat, dtype=np.float64).reshape(-1)
    beta_true = np.asarray(beta_true, dtype=np.float64).reshape(-1)
    _same_length(beta_hat, beta_true)
    if np.any(beta_true == 0):
        raise UndefinedMetricError("Percent bias is undefined for a zero true coefficient")
    return float(100.0 * np.mean(np.abs(beta_true - beta_hat) / np.abs(beta_true)))


def prediction_l1(p_hat: np.ndarray, p_true: np.ndarray) -> float:
    """Mean |p̂ − p| of class-membership probabilities"""
    p_hat = np.asarray(p_hat, dtype=np.float64)
    p_true = np.asarray(p_true, dtype=np.float64)
    _same_length(p_hat, p_true)
    for name, values in (("predicted", p_hat), ("true", p_true)):
        if np.any((values < 0) | (values > 1)) or not np.all(np.isfinite(values)):
            raise ValueError(f"{name} probabilities must lie in [0, 1]")
    return float(np.mean(np.abs(p_hat - p_true)))


def cohens_kappa(pred_class: np.ndarray, true_class: np.ndarray, n_classes: int) -> float:
    """(p_o − p_e) / (1 − p_e) with p_e from the marginal products"""
    pred = np.asarray(pred_class, dtype=np.int64)
    true = np.asarray(true_class, dtype=np.int64)
    _same_length(pred, true)
    if pred.size == 0:
        raise UndefinedMetricError("Kappa needs at least one row")
    for labels in (pred, true):
        if np.any((labels < 0) | (labels >= n_classes)):
            raise ValueError(f"Labels must lie in 0..{n_classes - 1}")
    table = np.zeros((n_classes, n_classes))
    np.add.at(table, (true, pred), 1.0)
    table /= pred.size
    p_o = float(np.trace(table))
    p_e = float(table.sum(axis=1) @ table.sum(axis=0))
    if np.isclose(p_e, 1.0):
        raise UndefinedMetricError("Kappa is undefined when chance agreement is 1")
    return (p_o - p_e) / (1.0 - p_e)


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann–Whitney statistic with average ranks, so ties count one half"""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _same_length(scores, labels)
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes")
    ranks = stats.rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def confusion_counts(pred: np.ndarray, true: np.ndarray) -> ConfusionCounts:
    """Binary confusion counts with class 1 as positive"""
    pred = np.asarray(pred).astype(np.int64)
    true = np.asarray(true).astype(np.int64)
    _same_length(pred, true)
    return ConfusionCounts(
        tp=int(np.sum((pred == 1) & (true == 1))),
        tn=int(np.sum((pred == 0) & (true == 0))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
    )


def ppv_f1(counts: ConfusionCounts, literal_ppv: bool = False) -> tuple[float, float]:
    """
    PPV = TP / (TP + FP) and F1 = 2TP / (2TP + FP + FN).

    literal_ppv computes TP / (TP + TN) instead, for comparison with
    published tables that use that form.
    """
    ppv_denominator = counts.tp + (counts.tn if literal_ppv else counts.fp)
    f1_denominator = 2 * counts.tp + counts.fp + counts.fn
    if ppv_denominator == 0:
        raise UndefinedMetricError("PPV is undefined with a zero denominator")
    if f1_denominator == 0:
        raise UndefinedMetricError("F1 is undefined with a zero denominator")
    return counts.tp / ppv_denominator, 2 * counts.tp / f1_denominator


class MetricsReport(BaseModel):
    """Every metric of one run; a metric that cannot be computed stays None"""

    method: str
    condition: str = ""
    n_miss: int = 0
    literal_ppv: bool = False
    imputation_l1: Optional[float] = None
    percent_bias: Optional[float] = None
    prediction_l1_predI: Optional[float] = None
    prediction_l1_predC: Optional[float] = None
    kappa_predI: Optional[float] = None
    kappa_predC: Optional[float] = None
    auc_predI: Optional[float] = None
    auc_predC: Optional[float] = None
    ppv_predI: Optional[float] = None
    f1_predI: Optional[float] = None
    confusion_predI: Optional[ConfusionCounts] = None
    undefined: dict[str, str] = Field(default_factory=dict)

    def metric_values(self) -> dict[str, float]:
        skip = {"method", "condition", "n_miss", "literal_ppv", "confusion_predI", "undefined"}
        return {
            name: float(value)
            for name, value in self.model_dump().items()
            if name not in skip and value is not None
        }

    def long_rows(self) -> list[dict[str, object]]:
        """(condition, method, metric, value) rows for plot-ready tables"""
        return [
            {"condition": self.condition, "method": self.method, "metric": name, "value": value}
            for name, value in self.metric_values().items()
        ]
