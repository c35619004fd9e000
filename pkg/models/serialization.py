"""
Model files: JSON with architecture, schema and flat parameter arrays
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from utils.errors import DataFormatError
from utils.io import read_json, write_json

from .dlglm import DlglmModel, ModelSchema, build_model
from .hyperparams import CovariateModel, Hyperparams, MechanismAssumption

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def model_to_dict(model: DlglmModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "hyperparameters": model.hp.model_dump(),
        "schema": model.schema.to_dict(),
        "mechanism_assumption": model.assumption.value,
        "covariate_model": model.covariate_model.value,
        "parameters": {
            name: {"shape": list(p.shape), "values": p.data.reshape(-1).tolist()}
            for name, p in model.store.named_parameters()
        },
    }


def model_from_dict(payload: dict) -> DlglmModel:
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise DataFormatError(f"Unsupported model format version {version}")
    model = build_model(
        Hyperparams.model_validate(payload["hyperparameters"]),
        ModelSchema.from_dict(payload["schema"]),
        MechanismAssumption(payload["mechanism_assumption"]),
        CovariateModel(payload["covariate_model"]),
        rng=np.random.default_rng(0),
    )
    stored = payload["parameters"]
    snapshot = {
        name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in stored.items()
    }
    try:
        model.store.restore(snapshot)
    except KeyError as e:
        raise DataFormatError(f"Model file is missing parameter {e}") from e
    return model


def save_model(path: Union[str, Path], model: DlglmModel) -> Path:
    target = write_json(path, model_to_dict(model))
    logger.info(f"Saved {model.method_name} model to {target}")
    return target


def load_model(path: Union[str, Path]) -> DlglmModel:
    return model_from_dict(read_json(path))
