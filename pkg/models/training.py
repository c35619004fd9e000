"""
Mini-batch ADAM training with validation-bound early stopping
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from autodiff import AdamState, ParameterStore, adam_step, no_grad
from dataset import Dataset, Split
from utils.errors import TrainingError

from .bounds import compute_bound, make_batch
from .dlglm import DlglmModel
from .hyperparams import Hyperparams

logger = logging.getLogger(__name__)

EPOCH_LOG_COLUMNS = ["epoch", "train_bound", "valid_bound", "elapsed_ms", "stopped_early"]


class EarlyStopDecision(str, Enum):
    CONTINUE = "continue"
    STOP = "stop"


@dataclass
class EarlyStopState:
    """
    Best validation bound seen, the stall counter and the parameters at the best bound.

    The counter is never reset: it counts every evaluation whose gain over
    the best bound is at most epsilon·|best|. With literal=True the threshold
    is epsilon·best, so for a negative bound only a clear drop counts as a stall.
    """

    patience: int = 50
    epsilon: float = 1e-4
    literal: bool = False
    l_opt: Optional[float] = None
    e: int = 0
    evaluations: int = 0
    best_snapshot: Optional[dict[str, np.ndarray]] = field(default=None, repr=False)

    def threshold(self) -> float:
        assert self.l_opt is not None
        scale = self.l_opt if self.literal else abs(self.l_opt)
        return self.epsilon * scale


def early_stop_update(
    state: EarlyStopState, l_valid: float, params: ParameterStore
) -> EarlyStopDecision:
    """Record one validation bound; on STOP the best snapshot is already restored"""
    state.evaluations += 1
    if state.l_opt is None:
        state.l_opt = l_valid
        state.best_snapshot = params.snapshot()
        return EarlyStopDecision.CONTINUE

    delta = l_valid - state.l_opt
    threshold = state.threshold()
    if delta > 0:
        state.l_opt = l_valid
        state.best_snapshot = params.snapshot()
    if delta <= threshold:
        state.e += 1
    if state.e >= state.patience:
        assert state.best_snapshot is not None
        params.restore(state.best_snapshot)
        return EarlyStopDecision.STOP
    return EarlyStopDecision.CONTINUE


@dataclass
class TrainedModel:
    """A model restored to its best validation snapshot, with its epoch log"""

    model: DlglmModel
    epoch_log: pd.DataFrame
    best_valid_bound: float
    stopped_early: bool

    @property
    def hp(self) -> Hyperparams:
        return self.model.hp

    @property
    def epochs_run(self) -> int:
        return len(self.epoch_log)

    @property
    def n_parameters(self) -> int:
        return self.model.n_parameters()


def evaluate_bound(
    model: DlglmModel, dataset: Dataset, rows: np.ndarray, k: int, rng: np.random.Generator
) -> float:
    """Bound summed over rows, evaluated in mini-batches without recording lineage"""
    total = 0.0
    with no_grad():
        for start in range(0, len(rows), model.hp.bs):
            batch = make_batch(dataset, rows[start : start + model.hp.bs])
            total += compute_bound(model, batch, k, rng).item()
    return total


def train(
    model: DlglmModel,
    dataset: Dataset,
    hp: Optional[Hyperparams] = None,
    rng: Optional[np.random.Generator] = None,
) -> TrainedModel:
    """
    Maximize the model's bound on the training split.

    Each batch objective is the batch's mean row bound scaled by the number
    of training rows. The validation bound is computed once per epoch with
    K_train and drives early stopping; the best snapshot is restored before
    returning.
    """
    hp = hp if hp is not None else model.hp
    rng = rng if rng is not None else np.random.default_rng(hp.seed)
    train_rows = dataset.rows(Split.TRAIN)
    valid_rows = dataset.rows(Split.VALID)
    if len(train_rows) == 0:
        raise TrainingError("Training split is empty")
    if len(valid_rows) == 0:
        raise TrainingError("Validation split is empty; early stopping needs it")
    n_train = len(train_rows)

    adam = AdamState()
    stop_state = EarlyStopState(
        patience=hp.patience, epsilon=hp.epsilon, literal=hp.literal_early_stop
    )
    records = []
    stopped = False
    logger.info(
        f"Training {model.method_name} ({hp.describe()}) on {n_train} rows, "
        f"{model.n_parameters()} parameters"
    )
    started = time.perf_counter()

    for epoch in range(1, hp.epochs_max + 1):
        order = rng.permutation(train_rows)
        train_total = 0.0
        for start in range(0, n_train, hp.bs):
            batch = make_batch(dataset, order[start : start + hp.bs])
            model.store.zero_grad()
            bound = compute_bound(model, batch, hp.k_train, rng)
            objective = bound * (n_train / batch.size)
            objective.backward()
            adam_step(model.store, adam, hp.lr)
            train_total += bound.item()

        if not all(np.all(np.isfinite(p.data)) for _, p in model.store.named_parameters()):
            raise TrainingError(f"Parameters became non-finite in epoch {epoch}")

        valid_bound = evaluate_bound(model, dataset, valid_rows, hp.k_train, rng)
        decision = early_stop_update(stop_state, valid_bound, model.store)
        stopped = decision == EarlyStopDecision.STOP
        records.append(
            {
                "epoch": epoch,
                "train_bound": train_total,
                "valid_bound": valid_bound,
                "elapsed_ms": round(1000.0 * (time.perf_counter() - started), 3),
                "stopped_early": stopped,
            }
        )
        logger.debug(f"Epoch {epoch}: train {train_total:.4f}, valid {valid_bound:.4f}")
        if stopped:
            logger.info(
                f"Early stop after epoch {epoch}; best validation bound {stop_state.l_opt:.4f}"
            )
            break

    if not stopped and stop_state.best_snapshot is not None:
        model.store.restore(stop_state.best_snapshot)
    assert stop_state.l_opt is not None
    return TrainedModel(
        model=model,
        epoch_log=pd.DataFrame.from_records(records, columns=EPOCH_LOG_COLUMNS),
        best_valid_bound=float(stop_state.l_opt),
        stopped_early=stopped,
    )
