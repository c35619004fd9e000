"""
Pipeline stages behind the command-line subcommands
"""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np
import pandas as pd

from dataset import (
    Dataset,
    Split,
    ingest_csv,
    read_dataset,
    simulate_xy,
    split_811,
    write_dataset,
)
from glm import FamilyKind, coefficient_table, extract_coefficients
from inference import (
    BaselineResult,
    PredictionMode,
    PredictionResult,
    impute_single,
    mean_impute_baseline,
    predict,
)
from metrics import (
    MetricsReport,
    auc,
    cohens_kappa,
    confusion_counts,
    imputation_l1,
    percent_bias,
    ppv_f1,
    prediction_l1,
)
from missingness import (
    calibrate_phi0,
    draw_phi,
    make_template,
    realized_missing_rates,
    simulate_mask,
)
from models import (
    DlglmModel,
    Hyperparams,
    MechanismAssumption,
    full_grid,
    grid_search,
    load_model,
    save_model,
    smoke_grid,
)
from utils.errors import MaskSimulationError, StageError, UndefinedMetricError
from utils.io import ensure_dir, write_frame, write_json, write_matrix
from utils.rng import (
    STREAM_IMPUTE,
    STREAM_MASK,
    STREAM_PREDICT,
    STREAM_SIMULATE,
    STREAM_SPLIT,
    derive_rng,
)

from . import __version__
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

MECHANISM_FILE = "mechanism.json"
LONG_COLUMNS = ["condition", "method", "metric", "value"]

PathLike = Union[str, Path]


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Re-raise any failure inside the block as a StageError tagged with name"""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error(f"Stage '{name}' failed: {e}")
        raise StageError(name, e) from e


# ---------------------------------------------------------------- data stages


def load_data(config: ExperimentConfig) -> Dataset:
    """The configured data source as a Dataset (split only for ingested CSVs)"""
    if config.simulate is not None:
        sim = config.simulate.model_copy(update={"seed": config.seed})
        return simulate_xy(sim, derive_rng(config.seed, STREAM_SIMULATE))
    if config.data_dir is not None:
        return read_dataset(config.data_dir)
    assert config.csv_path is not None and config.ingest is not None
    return ingest_csv(config.csv_path, config.ingest, derive_rng(config.seed, STREAM_SPLIT))


def ensure_split(dataset: Dataset, seed: int) -> Dataset:
    if dataset.split is not None:
        return dataset
    return split_811(dataset, derive_rng(seed, STREAM_SPLIT))


def apply_mechanism(
    dataset: Dataset, config: ExperimentConfig
) -> tuple[Dataset, dict[str, Any]]:
    """Simulate a mask on complete continuous covariates; returns the masked data and a report"""
    if config.mechanism is None:
        raise MaskSimulationError("No missingness mechanism configured")
    if dataset.x_true is None or dataset.n_missing > 0:
        raise MaskSimulationError("Masks can only be simulated on complete data")
    if dataset.has_categorical:
        raise MaskSimulationError("Mask simulation supports continuous covariates only")
    rng = derive_rng(config.seed, STREAM_MASK)
    template = make_template(
        config.mechanism,
        dataset.n_columns,
        form=config.form,
        frac_features_missing=config.frac_features_missing,
        target_missing_rate=config.target_missing_rate,
    )
    spec = calibrate_phi0(dataset.x_true, dataset.y, draw_phi(template, rng))
    mask = simulate_mask(dataset.x_true, dataset.y, spec, rng)
    rates = realized_missing_rates(mask, spec)
    logger.info(
        f"Simulated {config.mechanism.value} mask: realized missing rates "
        f"{[round(r, 4) for r in rates]} (target {config.target_missing_rate})"
    )
    report = {
        "mechanism": spec.model_dump(mode="json"),
        "realized_missing_rates": rates,
        "overall_missing_rate": float(1.0 - mask.mean()),
    }
    return dataset.with_mask(mask), report


def cmd_simulate(config: ExperimentConfig, out: PathLike) -> list[Path]:
    """X.csv, Y.csv, prob.csv and a manifest with the generating truth"""
    if config.simulate is None:
        raise StageError("config", ValueError("simulate needs a simulate block"))
    sim = config.simulate.model_copy(update={"seed": config.seed})
    with stage("data"):
        dataset = load_data(config)
        return write_dataset(
            out,
            dataset,
            write_mask=False,
            extra={
                "b0": sim.b0,
                "beta_value": sim.beta_value,
                "simulation": sim.model_dump(mode="json"),
                "version": __version__,
            },
        )


def cmd_mask(config: ExperimentConfig, out: PathLike) -> dict[str, Any]:
    """Mask a complete dataset; writes the dataset with R.csv and mechanism.json"""
    with stage("data"):
        dataset = load_data(config)
    with stage("mask"):
        masked, report = apply_mechanism(dataset, config)
        write_dataset(out, masked, write_mask=True)
        write_json(Path(out) / MECHANISM_FILE, report)
    return report


# --------------------------------------------------------------- run pipeline


@dataclass
class RunOutputs:
    """What run_pipeline produced, for callers that aggregate several runs"""

    directory: Path
    report: MetricsReport
    model: Optional[DlglmModel] = None
    baseline: Optional[BaselineResult] = None


def resolve_grid(config: ExperimentConfig, dataset: Dataset) -> list[Hyperparams]:
    base = config.base_hyperparams()
    if config.grid:
        shared = {"seed": base.seed, "k_train": base.k_train, "k_eval": base.k_eval}
        return [hp.model_copy(update=shared) for hp in config.grid]
    ignorable = config.method.assumption == MechanismAssumption.IGNORABLE
    if config.grid_preset == "smoke":
        return smoke_grid(base, ignorable=ignorable)
    if config.grid_preset == "full":
        real_data = config.csv_path is not None
        return full_grid(dataset.n_columns, real_data=real_data, ignorable=ignorable, base=base)
    return [base]


def _record(report: MetricsReport, name: str, compute: Callable[[], float]) -> None:
    """Set report.<name> = compute(), recording undefined metrics instead of failing"""
    try:
        setattr(report, name, float(compute()))
    except UndefinedMetricError as e:
        report.undefined[name] = str(e)


def _record_predictions(
    report: MetricsReport, dataset: Dataset, suffix: str, result: PredictionResult
) -> None:
    family = dataset.family
    y_true = dataset.y[result.rows]
    if dataset.truth is not None and family.kind == FamilyKind.BERNOULLI:
        prob = dataset.truth.prob[result.rows]
        _record(report, f"prediction_l1_{suffix}", lambda: prediction_l1(result.mean, prob))
    if family.is_classification:
        labels = y_true.astype(np.int64)
        _record(
            report,
            f"kappa_{suffix}",
            lambda: cohens_kappa(result.classes, labels, family.class_count),
        )
    if family.kind != FamilyKind.BERNOULLI:
        return
    _record(report, f"auc_{suffix}", lambda: auc(result.mean, y_true))
    if result.mode == PredictionMode.PRED_I:
        counts = confusion_counts(result.classes, y_true)
        report.confusion_predI = counts
        try:
            report.ppv_predI, report.f1_predI = ppv_f1(counts, literal_ppv=report.literal_ppv)
        except UndefinedMetricError as e:
            report.undefined["ppv_f1_predI"] = str(e)


def evaluate_run(
    dataset: Dataset,
    method: str,
    condition: str,
    imputed: Optional[np.ndarray],
    pred_i: Optional[PredictionResult],
    pred_c: Optional[PredictionResult],
    beta_hat: Optional[np.ndarray],
    literal_ppv: bool,
) -> MetricsReport:
    """Every metric the available truth supports"""
    report = MetricsReport(
        method=method,
        condition=condition,
        n_miss=dataset.n_missing,
        literal_ppv=literal_ppv,
    )
    x_true, truth = dataset.x_true, dataset.truth
    if imputed is not None and x_true is not None and dataset.n_missing > 0:
        _record(report, "imputation_l1", lambda: imputation_l1(imputed, x_true, dataset.mask))
    if beta_hat is not None and truth is not None:
        _record(report, "percent_bias", lambda: percent_bias(beta_hat, truth.beta))
    for suffix, result in (("predI", pred_i), ("predC", pred_c)):
        if result is not None:
            _record_predictions(report, dataset, suffix, result)
    return report


def _prediction_frame(result: PredictionResult, dataset: Dataset) -> pd.DataFrame:
    frame = pd.DataFrame({"row": result.rows})
    if dataset.family.kind == FamilyKind.CATEGORICAL:
        labels = dataset.class_labels or [str(c) for c in range(dataset.family.class_count)]
        for c, label in enumerate(labels):
            frame[f"prob_{label}"] = result.mean[:, c]
        frame["predicted_class"] = result.classes
    elif dataset.family.kind == FamilyKind.BERNOULLI:
        frame["prob_1"] = result.mean
        frame["predicted_class"] = result.classes
    else:
        frame["mean"] = result.mean
    return frame


def _coefficient_frame(beta: np.ndarray, beta0: Any, dataset: Dataset) -> pd.DataFrame:
    names = dataset.column_names
    if np.ndim(beta) == 1:
        return pd.DataFrame(coefficient_table(beta, beta0, names), columns=["feature", "estimate"])
    labels = dataset.class_labels or [str(c) for c in range(np.shape(beta)[1])]
    rows = np.vstack((np.asarray(beta0)[None, :], beta))
    frame = pd.DataFrame(rows, columns=[f"class_{label}" for label in labels])
    frame.insert(0, "feature", ["(intercept)"] + names)
    return frame


def _write_run_manifest(
    directory: Path, config: ExperimentConfig, dataset: Dataset, condition: str
) -> None:
    write_json(
        directory / "manifest.json",
        {
            "tool": "dlglm",
            "version": __version__,
            "config": config.model_dump(mode="json"),
            "condition": condition,
            "seed": config.seed,
            "streams": {
                "simulate": STREAM_SIMULATE,
                "mask": STREAM_MASK,
                "split": STREAM_SPLIT,
                "impute": STREAM_IMPUTE,
                "predict": STREAM_PREDICT,
            },
            "n_rows": dataset.n_rows,
            "n_missing": dataset.n_missing,
        },
    )


def _fit(
    config: ExperimentConfig, dataset: Dataset, directory: Path
) -> tuple[Optional[DlglmModel], Optional[BaselineResult]]:
    """Grid search for network methods, the mean-imputation fit otherwise"""
    if not config.method.is_network:
        return None, mean_impute_baseline(dataset)
    result = grid_search(
        resolve_grid(config, dataset),
        dataset,
        config.method.assumption,
        config.method.covariate_model,
        seed=config.seed,
        threads=config.threads,
    )
    write_frame(directory / "leaderboard.csv", result.leaderboard)
    for outcome in result.outcomes:
        if outcome.trained is not None:
            write_frame(directory / f"epoch_log_{outcome.index}.csv", outcome.trained.epoch_log)
    model = result.best.model
    save_model(directory / "model.json", model)
    return model, None


def run_pipeline(
    config: ExperimentConfig,
    out: PathLike,
    dataset: Optional[Dataset] = None,
    condition: str = "",
) -> RunOutputs:
    """
    Load, mask, split, fit, impute, predict and evaluate.

    A dataset passed in skips loading and masking (replicate shares one
    masked dataset across methods).
    """
    directory = ensure_dir(out)
    mechanism_report: Optional[dict[str, Any]] = None
    if dataset is None:
        with stage("data"):
            dataset = load_data(config)
        if config.mechanism is not None and dataset.n_missing == 0:
            with stage("mask"):
                dataset, mechanism_report = apply_mechanism(dataset, config)
    with stage("data"):
        dataset = ensure_split(dataset, config.seed)
        test_rows = dataset.rows(Split.TEST)

    _write_run_manifest(directory, config, dataset, condition)
    if mechanism_report is not None:
        write_json(directory / MECHANISM_FILE, mechanism_report)

    k_eval = config.base_hyperparams().k_eval
    labels = dataset.class_labels or None
    with stage("train"):
        model, baseline = _fit(config, dataset, directory)

    with stage("inference"):
        pred_c: Optional[PredictionResult] = None
        beta_hat: Optional[np.ndarray] = None
        beta0_hat: Any = None
        if model is not None:
            impute_rng = derive_rng(config.seed, STREAM_IMPUTE)
            imputation = impute_single(model, dataset, k_eval, impute_rng)
            imputed = imputation.x
            write_json(
                directory / "diagnostics.json",
                {"mean_ess": imputation.mean_ess, "min_ess": imputation.min_ess, "k_eval": k_eval},
            )
            predict_rng = derive_rng(config.seed, STREAM_PREDICT)
            pred_i = predict(
                model, dataset, k_eval, PredictionMode.PRED_I, predict_rng, rows=test_rows
            )
            if dataset.x_true is not None:
                pred_c = predict(model, dataset, k_eval, PredictionMode.PRED_C, rows=test_rows)
            if model.hp.nhl_y == 0:
                assert model.head is not None
                beta_hat, beta0_hat = extract_coefficients(model.head)
        else:
            assert baseline is not None
            imputed = baseline.dataset.x
            mean_i = baseline.predict(imputed[test_rows])
            pred_i = PredictionResult(
                PredictionMode.PRED_I, dataset.family, mean_i, test_rows, labels
            )
            if dataset.x_true is not None:
                mean_c = baseline.predict(dataset.x_true[test_rows])
                pred_c = PredictionResult(
                    PredictionMode.PRED_C, dataset.family, mean_c, test_rows, labels
                )
            beta_hat, beta0_hat = baseline.beta, baseline.beta0

        write_matrix(directory / "imputed.csv", imputed, dataset.column_names)
        write_frame(directory / "predictions_predI.csv", _prediction_frame(pred_i, dataset))
        if pred_c is not None:
            write_frame(directory / "predictions_predC.csv", _prediction_frame(pred_c, dataset))
        if beta_hat is not None:
            write_frame(
                directory / "coefficients.csv", _coefficient_frame(beta_hat, beta0_hat, dataset)
            )

    with stage("evaluate"):
        # percent bias only for one-output GLM coefficients on x
        one_output = beta_hat is not None and np.ndim(beta_hat) == 1
        report = evaluate_run(
            dataset,
            config.method.value,
            condition,
            imputed,
            pred_i,
            pred_c,
            beta_hat if one_output else None,
            config.literal_ppv,
        )
        write_json(directory / "metrics.json", report)
        write_frame(
            directory / "results_long.csv", pd.DataFrame(report.long_rows(), columns=LONG_COLUMNS)
        )
    logger.info(f"Run complete: {config.method.value} -> {directory}")
    return RunOutputs(directory, report, model, baseline)


def cmd_run(config: ExperimentConfig, out: Optional[PathLike] = None) -> Path:
    return run_pipeline(config, out or config.output_dir).directory


# ------------------------------------------------------ model-file subcommands


def _load_model_and_data(
    model_path: PathLike, config: ExperimentConfig
) -> tuple[DlglmModel, Dataset]:
    with stage("data"):
        dataset = ensure_split(load_data(config), config.seed)
    with stage("inference"):
        model = load_model(model_path)
    return model, dataset


def cmd_impute(config: ExperimentConfig, model_path: PathLike, out: PathLike) -> Path:
    """imputed.csv and diagnostics.json for every row of the dataset"""
    model, dataset = _load_model_and_data(model_path, config)
    k = config.base_hyperparams().k_eval
    with stage("inference"):
        result = impute_single(model, dataset, k, derive_rng(config.seed, STREAM_IMPUTE))
        directory = ensure_dir(out)
        write_matrix(directory / "imputed.csv", result.x, dataset.column_names)
        write_json(
            directory / "diagnostics.json",
            {"mean_ess": result.mean_ess, "min_ess": result.min_ess, "k_eval": k},
        )
    return directory / "imputed.csv"


def cmd_predict(
    config: ExperimentConfig, model_path: PathLike, out: PathLike, mode: PredictionMode
) -> Path:
    """predictions_<mode>.csv for the test split"""
    model, dataset = _load_model_and_data(model_path, config)
    k = config.base_hyperparams().k_eval
    with stage("inference"):
        rng = derive_rng(config.seed, STREAM_PREDICT)
        result = predict(model, dataset, k, mode, rng, rows=dataset.rows(Split.TEST))
        target = ensure_dir(out) / f"predictions_{mode.value}.csv"
        write_frame(target, _prediction_frame(result, dataset))
    return target


def _read_predictions(
    path: Path, dataset: Dataset, mode: PredictionMode
) -> Optional[PredictionResult]:
    if not path.exists():
        return None
    frame = pd.read_csv(path)
    rows = frame["row"].to_numpy(dtype=np.int64)
    if dataset.family.kind == FamilyKind.CATEGORICAL:
        columns = [c for c in frame.columns if str(c).startswith("prob_")]
        mean = frame[columns].to_numpy(dtype=np.float64)
    elif dataset.family.kind == FamilyKind.BERNOULLI:
        mean = frame["prob_1"].to_numpy(dtype=np.float64)
    else:
        mean = frame["mean"].to_numpy(dtype=np.float64)
    return PredictionResult(mode, dataset.family, mean, rows, dataset.class_labels or None)


def cmd_evaluate(config: ExperimentConfig, run_dir: PathLike) -> MetricsReport:
    """Recompute metrics.json from the files a run (or impute/predict) left behind"""
    run_dir = Path(run_dir)
    with stage("data"):
        dataset = ensure_split(load_data(config), config.seed)
    with stage("evaluate"):
        imputed = None
        if (run_dir / "imputed.csv").exists():
            imputed = pd.read_csv(run_dir / "imputed.csv").to_numpy(dtype=np.float64)
        beta_hat = None
        coefficients = run_dir / "coefficients.csv"
        if coefficients.exists():
            frame = pd.read_csv(coefficients)
            if list(frame.columns) == ["feature", "estimate"]:
                beta_hat = frame["estimate"].to_numpy(dtype=np.float64)[1:]
        report = evaluate_run(
            dataset,
            config.method.value,
            "",
            imputed,
            _read_predictions(run_dir / "predictions_predI.csv", dataset, PredictionMode.PRED_I),
            _read_predictions(run_dir / "predictions_predC.csv", dataset, PredictionMode.PRED_C),
            beta_hat,
            config.literal_ppv,
        )
        write_json(run_dir / "metrics.json", report)
    return report


def cmd_replicate(config: ExperimentConfig, out: PathLike) -> pd.DataFrame:
    """
    Simulation study: every mechanism × seed, every method on the same masked data.

    Returns and writes the long-format table (condition, method, metric, value).
    """
    if config.simulate is None:
        raise StageError("config", ValueError("replicate needs a simulate block"))
    directory = ensure_dir(out)
    rows: list[dict[str, object]] = []
    for seed in config.seeds:
        for mechanism in config.mechanisms:
            condition = f"{mechanism.value}/seed={seed}"
            trial = config.model_copy(update={"seed": seed, "mechanism": mechanism})
            with stage("data"):
                complete = load_data(trial)
            with stage("mask"):
                masked, report = apply_mechanism(complete, trial)
            with stage("data"):
                masked = ensure_split(masked, seed)
            for method in config.methods:
                run = trial.model_copy(update={"method": method})
                subdir = directory / mechanism.value / f"seed_{seed}" / method.value
                outputs = run_pipeline(run, subdir, dataset=masked, condition=condition)
                write_json(subdir / MECHANISM_FILE, report)
                rows.extend(outputs.report.long_rows())
    table = pd.DataFrame(rows, columns=LONG_COLUMNS)
    target = write_frame(directory / "results_long.csv", table)
    logger.info(f"Replication finished: {len(table)} metric rows in {target}")
    return table
