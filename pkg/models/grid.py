"""
Hyperparameter grid search ranked by the validation bound
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import pandas as pd

from dataset import Dataset
from utils.errors import DlglmError, GridSearchError
from utils.rng import derive_rng

from .dlglm import ModelSchema, build_model
from .hyperparams import CovariateModel, Hyperparams, MechanismAssumption
from .training import TrainedModel, train

logger = logging.getLogger(__name__)


@dataclass
class GridOutcome:
    index: int
    hp: Hyperparams
    trained: Optional[TrainedModel] = None
    error: Optional[str] = None


@dataclass
class GridResult:
    best: TrainedModel
    best_index: int
    leaderboard: pd.DataFrame
    outcomes: list[GridOutcome]


def _latent_sizes(p: int, real_data: bool) -> list[int]:
    last = 8 if real_data else p // 12
    sizes = [(3 * p) // 4, p // 2, p // 4, last]
    return list(dict.fromkeys(d for d in sizes if d >= 1))


def full_grid(
    p: int,
    real_data: bool = False,
    ignorable: bool = False,
    base: Optional[Hyperparams] = None,
) -> list[Hyperparams]:
    """
    The published search space for p covariates.

    Ignorable models fix nhl_r = 0 and h_r = 0. base supplies every field
    the grid does not vary (batch size, K, epochs, seed).
    """
    base = base if base is not None else Hyperparams()
    h_r_values = [0] if ignorable else [16, 32]
    nhl_r_values = [0] if ignorable else [0, 1]
    nhl_y_values = [0, 1, 2] if real_data else [0]
    names = ("h", "h_r", "lr", "dz", "nhl", "nhl_r", "nhl_y")
    values = itertools.product(
        [128, 64],
        h_r_values,
        [0.001, 0.01],
        _latent_sizes(p, real_data),
        [0, 1, 2],
        nhl_r_values,
        nhl_y_values,
    )
    return [base.model_copy(update=dict(zip(names, combo))) for combo in values]


def smoke_grid(base: Optional[Hyperparams] = None, ignorable: bool = False) -> list[Hyperparams]:
    """Two small configurations for quick end-to-end runs"""
    base = base if base is not None else Hyperparams(bs=200, epochs_max=20, k_eval=50)
    h_r = 0 if ignorable else 8
    return [
        base.model_copy(update={"h": 16, "h_r": h_r, "nhl": 1, "nhl_r": 0, "dz": 2, "lr": 0.01}),
        base.model_copy(update={"h": 32, "h_r": h_r, "nhl": 1, "nhl_r": 0, "dz": 2, "lr": 0.001}),
    ]


def _run_config(
    index: int,
    hp: Hyperparams,
    dataset: Dataset,
    schema: ModelSchema,
    assumption: MechanismAssumption,
    covariate_model: CovariateModel,
    seed: int,
) -> GridOutcome:
    try:
        model = build_model(hp, schema, assumption, covariate_model, rng=derive_rng(seed, index, 0))
        trained = train(model, dataset, hp, rng=derive_rng(seed, index, 1))
    except (DlglmError, ArithmeticError, ValueError) as e:
        logger.warning(f"Grid configuration {index} ({hp.describe()}) failed: {e}")
        return GridOutcome(index, hp, error=f"{type(e).__name__}: {e}")
    if not math.isfinite(trained.best_valid_bound):
        logger.warning(f"Grid configuration {index} ended with a non-finite validation bound")
        return GridOutcome(index, hp, error="non-finite validation bound")
    return GridOutcome(index, hp, trained=trained)


def _rank_key(outcome: GridOutcome) -> tuple[float, int, float, int]:
    assert outcome.trained is not None
    trained = outcome.trained
    return (-trained.best_valid_bound, trained.n_parameters, outcome.hp.lr, outcome.index)


def grid_search(
    grid: list[Hyperparams],
    dataset: Dataset,
    assumption: MechanismAssumption,
    covariate_model: CovariateModel = CovariateModel.IWAE_LATENT,
    seed: int = 0,
    threads: int = 1,
) -> GridResult:
    """
    Train every configuration and rank by best validation bound.

    Ties go to fewer parameters, then lower learning rate, then grid order.
    Configuration i trains on streams derived from (seed, i), so results do
    not depend on threads.
    """
    if not grid:
        raise ValueError("Grid is empty")
    schema = ModelSchema.from_dataset(dataset)
    logger.info(f"Grid search over {len(grid)} configurations with {threads} thread(s)")

    def run(item: tuple[int, Hyperparams]) -> GridOutcome:
        return _run_config(item[0], item[1], dataset, schema, assumption, covariate_model, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, enumerate(grid)))
    else:
        outcomes = [run(item) for item in enumerate(grid)]

    survivors = sorted((o for o in outcomes if o.trained is not None), key=_rank_key)
    if not survivors:
        raise GridSearchError({o.index: o.error or "unknown" for o in outcomes})
    ranks = {o.index: rank for rank, o in enumerate(survivors, start=1)}

    rows = []
    for o in outcomes:
        row = o.hp.model_dump()
        row.update(
            {
                "config": o.index,
                "rank": ranks.get(o.index),
                "status": "ok" if o.trained is not None else "failed",
                "valid_bound": None if o.trained is None else o.trained.best_valid_bound,
                "n_parameters": None if o.trained is None else o.trained.n_parameters,
                "epochs_run": None if o.trained is None else o.trained.epochs_run,
                "stopped_early": None if o.trained is None else o.trained.stopped_early,
                "error": o.error,
            }
        )
        rows.append(row)
    leaderboard = pd.DataFrame(rows)
    leading = [
        "config",
        "rank",
        "status",
        "valid_bound",
        "n_parameters",
        "epochs_run",
        "stopped_early",
    ]
    leaderboard = leaderboard[leading + [c for c in leaderboard.columns if c not in leading]]

    best = survivors[0]
    assert best.trained is not None
    logger.info(
        f"Best configuration {best.index} ({best.hp.describe()}): "
        f"validation bound {best.trained.best_valid_bound:.4f}"
    )
    return GridResult(best.trained, best.index, leaderboard, outcomes)
