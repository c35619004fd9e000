"""
CSV ingestion for real datasets: NA tokens, one-hot encoding, split and scaling
"""

import csv
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from glm import Family, FamilyKind
from utils.errors import DataFormatError, UnsupportedConfigurationError

from .dataset import Dataset, split_811, standardize_continuous
from .schema import FeatureColumn, FeatureKind

logger = logging.getLogger(__name__)

DEFAULT_NA_TOKENS = ["", "NA", "unknown", "nonexistent"]


class IngestSchema(BaseModel):
    """How to read a CSV: response, categorical columns and missing-value tokens"""

    response: str
    family: FamilyKind = FamilyKind.BERNOULLI
    categorical: list[str] = Field(default_factory=list)
    na_tokens: list[str] = Field(default_factory=lambda: list(DEFAULT_NA_TOKENS))
    sentinels: dict[str, list[str]] = Field(default_factory=dict)
    exclude: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_columns(self) -> "IngestSchema":
        if self.response in self.categorical:
            raise ValueError("The response cannot also be a categorical covariate")
        if self.response in self.exclude:
            raise ValueError("The response cannot be excluded")
        return self


def _missing_flags(column: pd.Series, tokens: set[str], sentinels: list[str]) -> np.ndarray:
    values = column.str.strip()
    missing = values.isin(tokens).to_numpy()
    if sentinels:
        missing |= values.isin(sentinels).to_numpy()
        numeric = pd.to_numeric(values, errors="coerce")
        for sentinel in sentinels:
            try:
                target = float(sentinel)
            except ValueError:
                continue
            missing |= (numeric == target).to_numpy()
    return missing


def _check_rectangular(path: Path) -> None:
    """Every non-blank line must have as many fields as the header"""
    with open(path, newline="", encoding="utf-8") as handle:
        counts = [len(row) for row in csv.reader(handle) if row]
    if not counts:
        raise DataFormatError(f"{path} has no header")
    for row, count in enumerate(counts[1:], start=1):
        if count != counts[0]:
            raise DataFormatError(
                f"Ragged rows in {path}: data row {row} has {count} fields, header has {counts[0]}"
            )


def _read_table(path: Path) -> pd.DataFrame:
    _check_rectangular(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise DataFormatError(f"Ragged rows in {path}: {e}") from e
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"{path} has no header") from e
    return frame


def _encode_response(values: pd.Series, family: FamilyKind) -> tuple[np.ndarray, list[str], Family]:
    if family == FamilyKind.GAUSSIAN:
        numeric = pd.to_numeric(values, errors="coerce")
        if numeric.isna().any():
            raise DataFormatError("Gaussian response has non-numeric values")
        return numeric.to_numpy(dtype=np.float64), [], Family.gaussian()

    numeric = pd.to_numeric(values, errors="coerce")
    if numeric.notna().all():
        labels = [str(v) for v in sorted(numeric.unique())]
        keys = numeric.map(lambda v: str(v))
    else:
        labels = sorted(values.unique())
        keys = values
    index = {label: i for i, label in enumerate(labels)}
    y = keys.map(index).to_numpy(dtype=np.float64)
    if family == FamilyKind.BERNOULLI:
        if len(labels) != 2:
            raise DataFormatError(f"Binary response needs 2 classes, found {len(labels)}")
        return y, labels, Family.bernoulli()
    return y, labels, Family.categorical(len(labels))


def ingest_csv(
    path: Union[str, Path], schema: IngestSchema, rng: Optional[np.random.Generator] = None
) -> Dataset:
    """
    Read a rectangular CSV into a split, standardized Dataset.

    NA tokens and per-column sentinels become mask zeros. A categorical
    source with C levels becomes C one-hot columns, all masked when the
    source value is missing.
    """
    path = Path(path)
    frame = _read_table(path)
    if schema.response not in frame.columns:
        raise DataFormatError(f"Response column '{schema.response}' not found in {path}")
    unknown = [c for c in schema.categorical + list(schema.sentinels) if c not in frame.columns]
    if unknown:
        raise DataFormatError(f"Columns not in {path}: {unknown}")
    tokens = set(schema.na_tokens)

    response_missing = _missing_flags(
        frame[schema.response], tokens, schema.sentinels.get(schema.response, [])
    )
    if response_missing.any():
        raise UnsupportedConfigurationError(
            f"Response '{schema.response}' has {int(response_missing.sum())} missing values; "
            "missing responses are not supported"
        )
    y, class_labels, family = _encode_response(frame[schema.response].str.strip(), schema.family)

    n = len(frame)
    blocks: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    features: list[FeatureColumn] = []
    start = 0
    for name in frame.columns:
        if name == schema.response or name in schema.exclude:
            continue
        values = frame[name].str.strip()
        missing = _missing_flags(frame[name], tokens, schema.sentinels.get(name, []))
        if name in schema.categorical:
            levels = sorted(values[~missing].unique())
            if not levels:
                raise DataFormatError(f"Categorical column '{name}' has no observed values")
            codes = values.map({level: i for i, level in enumerate(levels)}).to_numpy()
            onehot = np.full((n, len(levels)), np.nan)
            onehot[~missing] = np.eye(len(levels))[codes[~missing].astype(np.int64)]
            blocks.append(onehot)
            masks.append(np.repeat((~missing)[:, None], len(levels), axis=1))
            stop = start + len(levels)
            column = FeatureColumn(name, FeatureKind.CATEGORICAL, start, stop, tuple(levels))
            features.append(column)
            start = stop
        else:
            parsed = pd.to_numeric(values.where(~missing), errors="coerce")
            numeric = parsed.to_numpy(dtype=np.float64)
            bad = ~missing & np.isnan(numeric)
            if bad.any():
                row = int(np.flatnonzero(bad)[0])
                raise DataFormatError(
                    f"Column '{name}' has non-numeric value '{values.iloc[row]}' "
                    f"at data row {row + 1}"
                )
            blocks.append(numeric[:, None])
            masks.append((~missing)[:, None])
            features.append(FeatureColumn(name, FeatureKind.CONTINUOUS, start, start + 1))
            start += 1

    if not features:
        raise DataFormatError(f"{path} has no covariate columns")
    x = np.hstack(blocks)
    mask = np.hstack(masks).astype(np.int8)
    x = np.where(mask == 1, x, np.nan)
    logger.info(
        f"Read {path.name}: {n} rows, {len(features)} features ({x.shape[1]} encoded columns), "
        f"{int((mask == 0).sum())} missing entries"
    )

    dataset = Dataset(
        x=x,
        y=y,
        mask=mask,
        features=features,
        family=family,
        response_name=schema.response,
        class_labels=class_labels,
    )
    dataset = split_811(dataset, rng if rng is not None else np.random.default_rng())
    return standardize_continuous(dataset)
