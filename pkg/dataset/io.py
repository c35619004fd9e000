"""
Dataset directories: X.csv, Y.csv, prob.csv, R.csv and manifest.json
"""

import logging
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from glm import Family, FamilyKind
from utils.errors import DataFormatError
from utils.io import ensure_dir, read_json, read_matrix, write_frame, write_json, write_matrix

from .dataset import Dataset, SimulationTruth, StandardizationStats
from .schema import FeatureColumn

logger = logging.getLogger(__name__)

X_FILE = "X.csv"
Y_FILE = "Y.csv"
PROB_FILE = "prob.csv"
MASK_FILE = "R.csv"
MANIFEST_FILE = "manifest.json"


class DatasetManifest(BaseModel):
    """Everything about a dataset that is not one of its matrices"""

    features: list[dict[str, Any]]
    family: FamilyKind
    class_count: int
    response_name: str = "y"
    class_labels: list[str] = Field(default_factory=list)
    seed: Optional[int] = None
    split: Optional[list[int]] = None
    beta: Optional[list[float]] = None
    beta0: Optional[float] = None
    standardization_mean: Optional[list[float]] = None
    standardization_sd: Optional[list[float]] = None
    extra: dict[str, Any] = Field(default_factory=dict)


def write_dataset(
    directory: Union[str, Path],
    dataset: Dataset,
    write_mask: Optional[bool] = None,
    extra: Optional[dict[str, Any]] = None,
) -> list[Path]:
    """
    Write a dataset directory and return the files written.

    X.csv holds the complete covariates when they are known, otherwise the
    observed ones with NA at masked positions. R.csv is written when the
    dataset has missing entries or write_mask is set.
    """
    directory = ensure_dir(directory)
    write_mask = dataset.n_missing > 0 if write_mask is None else write_mask
    x = dataset.x_true if dataset.x_true is not None else dataset.x
    written = [
        write_matrix(directory / X_FILE, x, dataset.column_names),
        write_frame(directory / Y_FILE, pd.DataFrame({dataset.response_name: dataset.y})),
    ]
    if dataset.truth is not None:
        prob = pd.DataFrame({"prob": dataset.truth.prob})
        written.append(write_frame(directory / PROB_FILE, prob))
    if write_mask:
        written.append(write_matrix(directory / MASK_FILE, dataset.mask, dataset.column_names))

    truth, stats = dataset.truth, dataset.stats
    manifest = DatasetManifest(
        features=[f.to_dict() for f in dataset.features],
        family=dataset.family.kind,
        class_count=dataset.family.class_count,
        response_name=dataset.response_name,
        class_labels=list(dataset.class_labels),
        seed=dataset.seed,
        split=None if dataset.split is None else dataset.split.astype(int).tolist(),
        beta=None if truth is None else np.asarray(truth.beta).tolist(),
        beta0=None if truth is None else float(truth.beta0),
        standardization_mean=None if stats is None else stats.mean.tolist(),
        standardization_sd=None if stats is None else stats.sd.tolist(),
        extra=extra or {},
    )
    written.append(write_json(directory / MANIFEST_FILE, manifest))
    logger.info(f"Wrote dataset ({dataset.n_rows} x {dataset.n_columns}) to {directory}")
    return written


def read_manifest(directory: Union[str, Path]) -> DatasetManifest:
    path = Path(directory) / MANIFEST_FILE
    if not path.exists():
        raise DataFormatError(f"{path} not found")
    return DatasetManifest.model_validate(read_json(path))


def read_dataset(directory: Union[str, Path]) -> Dataset:
    """Inverse of write_dataset"""
    directory = Path(directory)
    manifest = read_manifest(directory)
    x, columns = read_matrix(directory / X_FILE)
    y_frame = pd.read_csv(directory / Y_FILE)
    y = y_frame.iloc[:, 0].to_numpy(dtype=np.float64)

    mask_path = directory / MASK_FILE
    if mask_path.exists():
        mask_values, mask_columns = read_matrix(mask_path)
        if mask_columns != columns:
            raise DataFormatError(f"{MASK_FILE} columns do not match {X_FILE}")
        mask = mask_values.astype(np.int8)
    else:
        mask = np.where(np.isnan(x), 0, 1).astype(np.int8)
    x_true = x if np.all(np.isfinite(x)) else None

    truth = None
    prob_path = directory / PROB_FILE
    if manifest.beta is not None and manifest.beta0 is not None and prob_path.exists():
        prob = pd.read_csv(prob_path)["prob"].to_numpy(dtype=np.float64)
        truth = SimulationTruth(np.asarray(manifest.beta), manifest.beta0, prob)
    stats = None
    if manifest.standardization_mean is not None and manifest.standardization_sd is not None:
        stats = StandardizationStats(
            np.asarray(manifest.standardization_mean), np.asarray(manifest.standardization_sd)
        )

    family = Family(manifest.family, manifest.class_count)
    features = [FeatureColumn.from_dict(f) for f in manifest.features]
    dataset = Dataset(
        x=np.where(mask == 1, x, np.nan),
        y=y,
        mask=mask,
        features=features,
        family=family,
        response_name=manifest.response_name,
        split=None if manifest.split is None else np.asarray(manifest.split, dtype=np.int8),
        x_true=x_true,
        truth=truth,
        stats=stats,
        seed=manifest.seed,
        class_labels=manifest.class_labels,
    )
    if dataset.column_names != columns:
        raise DataFormatError(f"{X_FILE} header does not match the manifest's feature layout")
    return dataset
