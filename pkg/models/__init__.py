"""
Models package: dlglm variants, their bounds, training and grid search
"""

from .bounds import (
    Batch,
    BoundNoise,
    WeightTerms,
    compute_bound,
    compute_dlglm_bound,
    compute_dlglmX_bound,
    compute_idlglm_bound,
    compute_iwae_bound,
    draw_noise,
    log_mean_exp,
    log_weight_terms,
    make_batch,
    row_bounds,
)
from .dlglm import DlglmModel, ModelSchema, build_model
from .grid import GridOutcome, GridResult, full_grid, grid_search, smoke_grid
from .hyperparams import CovariateModel, Hyperparams, MechanismAssumption, Method
from .serialization import load_model, model_from_dict, model_to_dict, save_model
from .training import (
    EarlyStopDecision,
    EarlyStopState,
    TrainedModel,
    early_stop_update,
    evaluate_bound,
    train,
)

__all__ = [
    "Batch",
    "BoundNoise",
    "CovariateModel",
    "DlglmModel",
    "EarlyStopDecision",
    "EarlyStopState",
    "GridOutcome",
    "GridResult",
    "Hyperparams",
    "MechanismAssumption",
    "Method",
    "ModelSchema",
    "TrainedModel",
    "WeightTerms",
    "build_model",
    "compute_bound",
    "compute_dlglm_bound",
    "compute_dlglmX_bound",
    "compute_idlglm_bound",
    "compute_iwae_bound",
    "draw_noise",
    "early_stop_update",
    "evaluate_bound",
    "full_grid",
    "grid_search",
    "load_model",
    "log_mean_exp",
    "log_weight_terms",
    "make_batch",
    "model_from_dict",
    "model_to_dict",
    "row_bounds",
    "save_model",
    "smoke_grid",
    "train",
]
