"""
Dataset package: containers, synthetic data, CSV ingestion and storage
"""

from .dataset import (
    Dataset,
    SimulationTruth,
    StandardizationStats,
    apply_standardization,
    preimpute_zero,
    split_811,
    standardize_continuous,
)
from .ingest import IngestSchema, ingest_csv
from .io import DatasetManifest, read_dataset, read_manifest, write_dataset
from .schema import FeatureColumn, FeatureKind, Split, continuous_features
from .synthetic import SimConfig, calibrate_intercept, normalize_columns, simulate_xy

__all__ = [
    "Dataset",
    "DatasetManifest",
    "FeatureColumn",
    "FeatureKind",
    "IngestSchema",
    "SimConfig",
    "SimulationTruth",
    "Split",
    "StandardizationStats",
    "apply_standardization",
    "calibrate_intercept",
    "continuous_features",
    "ingest_csv",
    "normalize_columns",
    "preimpute_zero",
    "read_dataset",
    "read_manifest",
    "simulate_xy",
    "split_811",
    "standardize_continuous",
    "write_dataset",
]
