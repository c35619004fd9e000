"""
Mean-imputation baseline followed by a classical GLM fit
"""

import logging
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from dataset import Dataset, FeatureKind, Split
from glm import Family, FamilyKind, inverse_link, irls_fit, least_squares_fit, multinomial_fit
from utils.errors import DataFormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BaselineResult:
    """Imputed dataset, fill values and the GLM fitted on the imputed training split"""

    dataset: Dataset
    fill_values: np.ndarray
    beta: np.ndarray
    beta0: Union[float, np.ndarray]
    family: Family

    def linear_predictor(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x @ self.beta + self.beta0

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Response-scale mean: (n,) for one-output families, (n, C) for categorical"""
        return inverse_link(self.linear_predictor(x), self.family)


def training_fill_values(dataset: Dataset) -> np.ndarray:
    """
    Per encoded column: the training-split observed mean (continuous) or
    the one-hot of the training mode (categorical)
    """
    train = dataset.rows(Split.TRAIN) if dataset.split is not None else np.arange(dataset.n_rows)
    fill = np.zeros(dataset.n_columns)
    for feature in dataset.features:
        observed_rows = train[dataset.mask[train, feature.start] == 1]
        if len(observed_rows) == 0:
            raise DataFormatError(f"Column '{feature.name}' has no observed training values")
        block = dataset.x[observed_rows, feature.start : feature.stop]
        if feature.kind == FeatureKind.CONTINUOUS:
            fill[feature.start] = block[:, 0].mean()
        else:
            mode = int(np.argmax(block.sum(axis=0)))
            fill[feature.start : feature.stop] = np.eye(feature.width)[mode]
    return fill


def mean_impute_baseline(dataset: Dataset) -> BaselineResult:
    """
    Fill masked entries of every split with training statistics, then fit
    IRLS (binary), least squares (gaussian) or multinomial Newton
    (categorical) on the imputed training rows.
    """
    fill = training_fill_values(dataset)
    x = np.where(dataset.mask == 1, dataset.x, fill[None, :])
    imputed = replace(dataset, x=x, mask=np.ones_like(dataset.mask))

    train = dataset.rows(Split.TRAIN) if dataset.split is not None else np.arange(dataset.n_rows)
    family = dataset.family
    # the first level of each categorical feature is the reference
    kept = [
        j
        for f in dataset.features
        for j in range(f.start, f.stop)
        if f.kind == FeatureKind.CONTINUOUS or j > f.start
    ]
    x_train, y_train = x[np.ix_(train, kept)], dataset.y[train]
    fitted: np.ndarray
    beta0: Union[float, np.ndarray]
    if family.kind == FamilyKind.BERNOULLI:
        fitted, beta0 = irls_fit(x_train, y_train)
    elif family.kind == FamilyKind.GAUSSIAN:
        fitted, beta0 = least_squares_fit(x_train, y_train)
    else:
        fitted, beta0 = multinomial_fit(x_train, y_train, family.class_count)
    beta = np.zeros((dataset.n_columns,) + fitted.shape[1:])
    beta[kept] = fitted
    logger.info(
        f"Mean-imputation baseline fitted on {len(train)} rows ({dataset.n_missing} entries filled)"
    )
    return BaselineResult(imputed, fill, beta, beta0, family)
