"""
Response prediction from complete (predC) or incomplete (predI) covariates
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy import special

from autodiff import Tensor, no_grad
from config import settings
from dataset import Dataset, FeatureKind
from glm import Family, FamilyKind, inverse_link
from models import DlglmModel

from .imputation import effective_sample_size, sample_terms

logger = logging.getLogger(__name__)


class PredictionMode(str, Enum):
    PRED_I = "predI"
    PRED_C = "predC"


@dataclass(frozen=True, eq=False)
class PredictionResult:
    """
    Response-scale means per row.

    mean is (n,) for one-output families (class-1 probability for binary
    responses) and (n, C) class probabilities for categorical ones.
    """

    mode: PredictionMode
    family: Family
    mean: np.ndarray
    rows: np.ndarray
    class_labels: Optional[list[str]] = None

    @property
    def probabilities(self) -> np.ndarray:
        """(n, C) class probabilities; binary rows are [1 − p, p]"""
        if self.family.kind == FamilyKind.BERNOULLI:
            return np.column_stack((1.0 - self.mean, self.mean))
        if self.family.kind == FamilyKind.CATEGORICAL:
            return self.mean
        raise ValueError("Gaussian predictions have no class probabilities")

    @property
    def classes(self) -> np.ndarray:
        """Most probable class; ties go to the lowest class index"""
        if self.family.kind == FamilyKind.BERNOULLI:
            return (self.mean > 0.5).astype(np.int64)
        return np.argmax(self.probabilities, axis=1)


def harden(x: np.ndarray, model: DlglmModel) -> np.ndarray:
    """Relaxed categorical samples replaced by the one-hot of their largest entry"""
    x = np.array(x, dtype=np.float64, copy=True)
    for feature in model.schema.features:
        if feature.kind == FeatureKind.CATEGORICAL:
            block = x[..., feature.start : feature.stop]
            x[..., feature.start : feature.stop] = np.eye(feature.width)[np.argmax(block, axis=-1)]
    return x


def _response_mean(model: DlglmModel, x: np.ndarray) -> np.ndarray:
    assert model.head is not None
    with no_grad():
        eta = model.head(Tensor(x)).data
    mean = inverse_link(eta, model.schema.family)
    return mean[:, 0] if model.schema.family.n_outputs == 1 else mean


def _complete_covariates(dataset: Dataset, rows: np.ndarray) -> np.ndarray:
    if dataset.x_true is not None:
        return dataset.x_true[rows]
    x = dataset.x[rows]
    if not (dataset.mask[rows] == 1).all():
        raise ValueError("predC needs complete rows and the true covariates are unknown")
    return x


def predict(
    model: DlglmModel,
    dataset: Dataset,
    k: int,
    mode: PredictionMode,
    rng: Optional[np.random.Generator] = None,
    rows: Optional[np.ndarray] = None,
    chunk_size: Optional[int] = None,
) -> PredictionResult:
    """
    predC evaluates the GLM head on complete covariates.

    predI draws K completions of each incomplete row with the response left
    out of every conditioning, weights them by y-free importance scores and
    averages the response-scale means. Complete rows take the predC path.
    """
    rows = np.arange(dataset.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    family = model.schema.family
    if mode == PredictionMode.PRED_C:
        mean = _response_mean(model, _complete_covariates(dataset, rows))
        return PredictionResult(mode, family, mean, rows, dataset.class_labels or None)

    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    rng = rng if rng is not None else np.random.default_rng(model.hp.seed)
    chunk_size = chunk_size or settings.impute_chunk_size
    mask = dataset.mask[rows]
    complete = (mask == 1).all(axis=1)
    shape = (len(rows),) if family.n_outputs == 1 else (len(rows), family.n_outputs)
    mean = np.empty(shape)

    if complete.any():
        observed = np.where(mask[complete] == 1, dataset.x[rows[complete]], 0.0)
        mean[complete] = _response_mean(model, observed)

    incomplete = rows[~complete]
    if len(incomplete):
        # the response never reaches the sampler; zeros are valid for every family
        blind = replace(dataset, y=np.zeros(dataset.n_rows))
        if model.hp.include_y_in_posterior:
            logger.warning(
                f"{model.method_name} feeds the response to its posterior networks; "
                "predicting with the response fixed at 0 there"
            )
        slots = np.flatnonzero(~complete)
        min_ess = np.inf
        for start in range(0, len(incomplete), chunk_size):
            chunk = incomplete[start : start + chunk_size]
            terms = sample_terms(model, blind, chunk, k, rng)
            log_s = terms.log_weights(use_y=False, use_mask=model.is_mnar).data.T
            w = special.softmax(log_s, axis=1)
            min_ess = min(min_ess, float(np.min(effective_sample_size(w))))
            x_samples = harden(terms.x_full.data, model)
            per_sample = _response_mean(model, x_samples)
            per_sample = per_sample.reshape((k, len(chunk)) + per_sample.shape[1:])
            mean[slots[start : start + len(chunk)]] = np.einsum("bk,kb...->b...", w, per_sample)
        logger.debug(f"predI over {len(incomplete)} incomplete rows, minimum ESS {min_ess:.2f}")

    return PredictionResult(mode, family, mean, rows, dataset.class_labels or None)
