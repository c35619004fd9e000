"""
Metrics package
"""

from .evaluation import (
    ConfusionCounts,
    MetricsReport,
    auc,
    cohens_kappa,
    confusion_counts,
    imputation_l1,
    percent_bias,
    ppv_f1,
    prediction_l1,
)

__all__ = [
    "ConfusionCounts",
    "MetricsReport",
    "auc",
    "cohens_kappa",
    "confusion_counts",
    "imputation_l1",
    "percent_bias",
    "ppv_f1",
    "prediction_l1",
]
