"""
Single imputation by self-normalized importance sampling
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from autodiff import no_grad
from config import settings
from dataset import Dataset, FeatureKind
from models import DlglmModel, WeightTerms, log_weight_terms, make_batch

logger = logging.getLogger(__name__)

# Below this effective sample size the weights have collapsed onto one draw
LOW_ESS = 1.05
ESS_WARNING_MIN_K = 10


@dataclass(frozen=True, eq=False)
class ImportanceWeights:
    """Per-row normalized weights w (n, K) and the raw log-scores they came from"""

    log_scores: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_log_scores(cls, log_scores: np.ndarray) -> "ImportanceWeights":
        log_scores = np.asarray(log_scores, dtype=np.float64)
        return cls(log_scores, special.softmax(log_scores, axis=1))

    @property
    def k(self) -> int:
        return int(self.weights.shape[1])


def effective_sample_size(weights: np.ndarray) -> np.ndarray:
    """1 / Σ_k w_k² per row"""
    weights = np.asarray(weights, dtype=np.float64)
    return 1.0 / np.sum(weights * weights, axis=-1)


@dataclass(frozen=True, eq=False)
class ImputationResult:
    """Completed covariates for the requested rows, in the dataset's encoded layout"""

    x: np.ndarray
    rows: np.ndarray
    ess: np.ndarray
    weights: Optional[ImportanceWeights] = None

    @property
    def mean_ess(self) -> float:
        return float(np.mean(self.ess)) if self.ess.size else float("nan")

    @property
    def min_ess(self) -> float:
        return float(np.min(self.ess)) if self.ess.size else float("nan")


def sample_terms(
    model: DlglmModel,
    dataset: Dataset,
    rows: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> WeightTerms:
    with no_grad():
        return log_weight_terms(model, make_batch(dataset, rows), k, rng)


def weighted_completion(
    model: DlglmModel, x_observed: np.ndarray, mask: np.ndarray, samples: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """
    Σ_k w_k x̃_k at masked entries, observed entries kept.

    samples is (K, B, p); categorical features take the class with the
    largest weighted probability, returned as a one-hot block.
    """
    weighted = np.einsum("bk,kbp->bp", w, samples)
    for feature in model.schema.features:
        if feature.kind != FeatureKind.CATEGORICAL:
            continue
        block = weighted[:, feature.start : feature.stop]
        weighted[:, feature.start : feature.stop] = np.eye(feature.width)[np.argmax(block, axis=1)]
    return np.where(mask == 1, x_observed, weighted)


def impute_single(
    model: DlglmModel,
    dataset: Dataset,
    k: int,
    rng: np.random.Generator,
    rows: Optional[np.ndarray] = None,
    use_y: bool = True,
    chunk_size: Optional[int] = None,
    keep_weights: bool = False,
) -> ImputationResult:
    """
    Impute masked entries with one (z, x^m) draw per k and normalized weights.

    The log-score of draw k is the model's log joint minus the proposal;
    MNAR models include the mask likelihood, ignorable models omit it.
    use_y=False drops p(y | x) from the score.
    """
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    rows = np.arange(dataset.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    chunk_size = chunk_size or settings.impute_chunk_size
    completed = np.empty((len(rows), dataset.n_columns))
    ess = np.empty(len(rows))
    scores = np.empty((len(rows), k))

    for start in range(0, len(rows), chunk_size):
        chunk = rows[start : start + chunk_size]
        terms = sample_terms(model, dataset, chunk, k, rng)
        log_s = terms.log_weights(use_y=use_y, use_mask=model.is_mnar).data.T
        weights = ImportanceWeights.from_log_scores(log_s)
        samples = terms.x_full.data.reshape(k, len(chunk), -1)
        x_observed = np.where(dataset.mask[chunk] == 1, dataset.x[chunk], 0.0)
        completed[start : start + len(chunk)] = weighted_completion(
            model, x_observed, dataset.mask[chunk], samples, weights.weights
        )
        ess[start : start + len(chunk)] = effective_sample_size(weights.weights)
        scores[start : start + len(chunk)] = log_s

    incomplete = (dataset.mask[rows] == 0).any(axis=1)
    if k >= ESS_WARNING_MIN_K and np.any(ess[incomplete] < LOW_ESS):
        logger.warning(
            f"{int(np.sum(ess[incomplete] < LOW_ESS))} row(s) have effective sample size below "
            f"{LOW_ESS} with K={k}; importance weights are degenerate"
        )
    logger.info(
        f"Imputed {int(incomplete.sum())} incomplete rows with K={k} "
        f"(mean ESS {float(np.mean(ess)) if len(ess) else float('nan'):.2f})"
    )
    return ImputationResult(
        x=completed,
        rows=rows,
        ess=ess,
        weights=ImportanceWeights.from_log_scores(scores) if keep_weights else None,
    )
