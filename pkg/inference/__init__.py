"""
Inference package: importance-sampling imputation, prediction and the baseline
"""

from .baseline import BaselineResult, mean_impute_baseline, training_fill_values
from .imputation import (
    ImportanceWeights,
    ImputationResult,
    effective_sample_size,
    impute_single,
    weighted_completion,
)
from .prediction import PredictionMode, PredictionResult, harden, predict

__all__ = [
    "BaselineResult",
    "ImportanceWeights",
    "ImputationResult",
    "PredictionMode",
    "PredictionResult",
    "effective_sample_size",
    "harden",
    "impute_single",
    "mean_impute_baseline",
    "predict",
    "training_fill_values",
    "weighted_completion",
]
