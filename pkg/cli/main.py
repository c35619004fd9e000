"""
dlglm command-line interface
"""

import argparse
import json
import logging
import sys
from typing import Any, Optional

from pydantic import ValidationError

from config import settings
from dataset import SimConfig
from inference import PredictionMode
from missingness import MechanismForm, MechanismKind
from models import Method
from utils.errors import StageError

from . import __version__
from .commands import (
    cmd_evaluate,
    cmd_impute,
    cmd_mask,
    cmd_predict,
    cmd_replicate,
    cmd_run,
    cmd_simulate,
)
from .config import ExperimentConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
OVERRIDE_FLAGS = (
    "seed",
    "method",
    "mechanism",
    "form",
    "k_train",
    "k_eval",
    "threads",
    "literal_ppv",
)

EXIT_CODES = {
    "config": 2,
    "data": 3,
    "mask": 4,
    "train": 5,
    "inference": 6,
    "evaluate": 7,
}


def setup_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Experiment configuration JSON")
    parser.add_argument("--seed", type=int, help="Root seed for every random stream")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--data", help="Dataset directory written by simulate or mask")
    parser.add_argument("--n", type=int, help="Simulated observations")
    parser.add_argument("--p", type=int, help="Simulated covariates")
    parser.add_argument("--d", type=int, help="Simulated latent dimension")
    parser.add_argument("--method", choices=[m.value for m in Method])
    parser.add_argument(
        "--mechanism", type=str.lower, choices=[m.value for m in MechanismKind]
    )
    parser.add_argument("--form", choices=[f.value for f in MechanismForm])
    parser.add_argument("--k-train", type=int, dest="k_train")
    parser.add_argument("--k-eval", type=int, dest="k_eval")
    parser.add_argument("--threads", type=int)
    parser.add_argument(
        "--literal-ppv",
        action="store_true",
        default=None,
        dest="literal_ppv",
        help="Report TP / (TP + TN) as PPV",
    )
    parser.add_argument("--log-level", dest="log_level", help="Overrides LOG_LEVEL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlglm",
        description="Deeply-learned GLMs with missing covariates",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    _add_common(
        subparsers.add_parser("simulate", help="Simulate complete covariates and a response")
    )
    _add_common(subparsers.add_parser("mask", help="Simulate a missingness mask on complete data"))
    _add_common(subparsers.add_parser("run", help="Fit, impute, predict and evaluate one method"))

    impute = subparsers.add_parser("impute", help="Impute a dataset with a saved model")
    _add_common(impute)
    impute.add_argument("--model", required=True, help="model.json written by run")

    predict = subparsers.add_parser("predict", help="Predict the test split with a saved model")
    _add_common(predict)
    predict.add_argument("--model", required=True, help="model.json written by run")
    predict.add_argument(
        "--mode", choices=[m.value for m in PredictionMode], default=PredictionMode.PRED_I.value
    )

    evaluate = subparsers.add_parser("evaluate", help="Recompute metrics for a run directory")
    _add_common(evaluate)
    evaluate.add_argument("--run-dir", required=True, dest="run_dir")

    _add_common(
        subparsers.add_parser("replicate", help="Every mechanism, method and seed on simulation")
    )
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """The --config file (or a default simulation) with command-line flags applied on top"""
    data: dict[str, Any]
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            data = json.load(handle)
    else:
        data = {}

    sim_flags = {k: getattr(args, k) for k in ("n", "p", "d") if getattr(args, k) is not None}
    if args.data:
        data.pop("simulate", None)
        data.pop("csv_path", None)
        data["data_dir"] = args.data
    elif sim_flags or not any(data.get(k) for k in ("simulate", "csv_path", "data_dir")):
        simulate = dict(data.get("simulate") or {})
        simulate.update(sim_flags)
        simulate.setdefault("n", 1000)
        simulate.setdefault("p", 8)
        simulate.setdefault("d", 2)
        data["simulate"] = SimConfig.model_validate(simulate).model_dump(mode="json")

    for key in OVERRIDE_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.out:
        data["output_dir"] = args.out
    return ExperimentConfig.model_validate(data)


def dispatch(args: argparse.Namespace, config: ExperimentConfig) -> None:
    out = config.output_dir
    if args.command == "simulate":
        cmd_simulate(config, out)
    elif args.command == "mask":
        cmd_mask(config, out)
    elif args.command == "run":
        cmd_run(config, out)
    elif args.command == "impute":
        cmd_impute(config, args.model, out)
    elif args.command == "predict":
        cmd_predict(config, args.model, out, PredictionMode(args.mode))
    elif args.command == "evaluate":
        cmd_evaluate(config, args.run_dir)
    elif args.command == "replicate":
        cmd_replicate(config, out)


def main(argv: Optional[list[str]] = None) -> int:
    """Parse arguments, run the subcommand and map failures to stage exit codes"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK

    setup_logging(args.log_level)
    logger.info(f"dlglm {__version__}: {args.command}")

    try:
        config = config_from_args(args)
    except (ValidationError, OSError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CODES["config"]

    try:
        dispatch(args, config)
    except StageError as e:
        logger.error(f"{args.command} failed in stage '{e.stage}': {e.cause}")
        return EXIT_CODES.get(e.stage, 1)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
