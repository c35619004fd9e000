"""
Small helpers for writing result artifacts
"""

import json
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

NA_REPR = "NA"


def ensure_dir(path: PathLike) -> Path:
    """Create directory (and parents) if needed"""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _to_jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    return value


def write_json(path: PathLike, payload: Union[BaseModel, dict[str, Any]]) -> Path:
    """Write a pydantic model or plain dict as indented JSON"""
    target = Path(path)
    ensure_dir(target.parent)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(_to_jsonable(payload), indent=2, sort_keys=True)
    target.write_text(text + "\n", encoding="utf-8")
    logger.debug(f"Wrote {target}")
    return target


def read_json(path: PathLike) -> dict[str, Any]:
    """Read a JSON document"""
    with open(path, encoding="utf-8") as handle:
        data: dict[str, Any] = json.load(handle)
    return data


def write_frame(path: PathLike, frame: pd.DataFrame) -> Path:
    """Write a DataFrame as CSV without the index"""
    target = Path(path)
    ensure_dir(target.parent)
    frame.to_csv(target, index=False, na_rep=NA_REPR)
    logger.debug(f"Wrote {target} ({len(frame)} rows)")
    return target


def write_matrix(path: PathLike, matrix: np.ndarray, columns: list[str]) -> Path:
    """Write a 2-D array with a header row"""
    return write_frame(path, pd.DataFrame(np.asarray(matrix), columns=columns))


def read_matrix(path: PathLike) -> tuple[np.ndarray, list[str]]:
    """Read a numeric CSV written by write_matrix"""
    frame = pd.read_csv(path, na_values=[NA_REPR], keep_default_na=False)
    return frame.to_numpy(dtype=np.float64), [str(c) for c in frame.columns]
