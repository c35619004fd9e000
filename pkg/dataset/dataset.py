"""
Dataset container, splitting, standardization and zero pre-imputation
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from glm import Family
from utils.errors import ShapeMismatchError

from .schema import FeatureColumn, FeatureKind, Split

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimulationTruth:
    """Generating values of a simulated dataset"""

    beta: np.ndarray
    beta0: float
    prob: np.ndarray


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    """Per-encoded-column centre and scale (identity for one-hot columns)"""

    mean: np.ndarray
    sd: np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Encoded covariates with mask and response.

    x holds NaN wherever mask == 0; model code reads it only through
    preimpute_zero. x_true keeps the complete covariates when they are known
    (simulations), which predC and the imputation metrics need.
    """

    x: np.ndarray
    y: np.ndarray
    mask: np.ndarray
    features: list[FeatureColumn]
    family: Family
    response_name: str = "y"
    split: Optional[np.ndarray] = None
    x_true: Optional[np.ndarray] = None
    truth: Optional[SimulationTruth] = None
    stats: Optional[StandardizationStats] = None
    seed: Optional[int] = None
    class_labels: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        n, p = self.x.shape
        if self.mask.shape != (n, p):
            raise ShapeMismatchError(f"mask shape {self.mask.shape} differs from x {self.x.shape}")
        if self.y.shape[0] != n:
            raise ShapeMismatchError(f"{self.y.shape[0]} responses for {n} rows")
        if self.features and self.features[-1].stop != p:
            raise ShapeMismatchError("Feature layout does not cover every column")
        if self.split is not None and self.split.shape != (n,):
            raise ShapeMismatchError("split needs one label per row")

    @property
    def n_rows(self) -> int:
        return int(self.x.shape[0])

    @property
    def n_columns(self) -> int:
        return int(self.x.shape[1])

    @property
    def column_names(self) -> list[str]:
        return [name for feature in self.features for name in feature.encoded_names]

    @property
    def n_missing(self) -> int:
        return int((self.mask == 0).sum())

    @property
    def has_categorical(self) -> bool:
        return any(f.kind == FeatureKind.CATEGORICAL for f in self.features)

    @property
    def missing_features(self) -> list[FeatureColumn]:
        """Source features with at least one masked row"""
        return [f for f in self.features if (self.mask[:, f.start] == 0).any()]

    def rows(self, split: Split) -> np.ndarray:
        if self.split is None:
            raise ValueError("Dataset has not been split")
        return np.flatnonzero(self.split == split)

    def subset(self, rows: np.ndarray) -> "Dataset":
        """Row subset keeping layout and truth metadata"""
        truth = self.truth
        if truth is not None:
            truth = SimulationTruth(truth.beta, truth.beta0, truth.prob[rows])
        return replace(
            self,
            x=self.x[rows],
            y=self.y[rows],
            mask=self.mask[rows],
            split=None if self.split is None else self.split[rows],
            x_true=None if self.x_true is None else self.x_true[rows],
            truth=truth,
        )

    def with_mask(self, mask: np.ndarray) -> "Dataset":
        """Apply a new mask to the complete covariates"""
        complete = self.x_true if self.x_true is not None else self.x
        mask = np.asarray(mask, dtype=np.int8)
        if mask.shape != complete.shape:
            raise ShapeMismatchError(f"mask shape {mask.shape} differs from x {complete.shape}")
        return replace(self, x=np.where(mask == 1, complete, np.nan), mask=mask, x_true=complete)


def preimpute_zero(X: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Masked entries set to 0, observed entries unchanged"""
    X = np.asarray(X, dtype=np.float64)
    R = np.asarray(R)
    if X.shape != R.shape:
        raise ShapeMismatchError(f"X {X.shape} and R {R.shape} differ")
    return np.where(R == 1, X, 0.0)


def split_811(dataset: Dataset, rng: np.random.Generator) -> Dataset:
    """Random train/valid/test labels with sizes ⌊0.8n⌋ / ⌊0.1n⌋ / rest"""
    n = dataset.n_rows
    if n < 10:
        raise ValueError(f"Need at least 10 rows to split, got {n}")
    n_train, n_valid = int(np.floor(0.8 * n)), int(np.floor(0.1 * n))
    order = rng.permutation(n)
    split = np.full(n, Split.TEST, dtype=np.int8)
    split[order[:n_train]] = Split.TRAIN
    split[order[n_train : n_train + n_valid]] = Split.VALID
    logger.debug(f"Split {n} rows into {n_train}/{n_valid}/{n - n_train - n_valid}")
    return replace(dataset, split=split)


def standardize_continuous(dataset: Dataset) -> Dataset:
    """Centre and scale continuous columns with training-split observed statistics"""
    train = dataset.rows(Split.TRAIN) if dataset.split is not None else np.arange(dataset.n_rows)
    mean = np.zeros(dataset.n_columns)
    sd = np.ones(dataset.n_columns)
    for feature in dataset.features:
        if feature.kind != FeatureKind.CONTINUOUS:
            continue
        j = feature.start
        observed = dataset.x[train, j][dataset.mask[train, j] == 1]
        if observed.size == 0:
            raise ValueError(f"Column '{feature.name}' has no observed training values")
        mean[j] = observed.mean()
        spread = observed.std()
        sd[j] = spread if spread > 0 else 1.0
    stats = StandardizationStats(mean=mean, sd=sd)
    return replace(
        dataset,
        x=apply_standardization(dataset.x, stats),
        x_true=None if dataset.x_true is None else apply_standardization(dataset.x_true, stats),
        stats=stats,
    )


def apply_standardization(X: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - stats.mean) / stats.sd
