"""
Integration tests for the dlglm command line
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from cli.main import EXIT_CODES, EXIT_OK, main
from utils.errors import GridSearchError

SMALL_HYPERPARAMS = {
    "h": 8,
    "h_r": 4,
    "nhl": 1,
    "dz": 2,
    "bs": 64,
    "k_train": 3,
    "k_eval": 10,
    "epochs_max": 2,
    "patience": 5,
}


def _write_config(path: Path, **fields) -> Path:
    payload = {
        "simulate": {"n": 200, "p": 4, "d": 2},
        "mechanism": "mnar",
        "hyperparams": SMALL_HYPERPARAMS,
        "seed": 5,
    }
    payload.update(fields)
    path.write_text(json.dumps(payload))
    return path


@pytest.fixture
def config_path(tmp_path: Path) -> Path:
    return _write_config(tmp_path / "config.json")


@pytest.fixture
def masked_dir(tmp_path: Path, config_path: Path) -> Path:
    out = tmp_path / "masked"
    assert main(["mask", "--config", str(config_path), "--out", str(out)]) == EXIT_OK
    return out


@pytest.mark.integration
class TestDataCommands:
    """Test simulate and mask"""

    def test_simulate(self, tmp_path: Path, config_path: Path):
        """Test simulate writes the complete data and its truth"""
        out = tmp_path / "sim"
        assert main(["simulate", "--config", str(config_path), "--out", str(out)]) == EXIT_OK
        assert {p.name for p in out.iterdir()} >= {"X.csv", "Y.csv", "prob.csv", "manifest.json"}
        assert not (out / "R.csv").exists()
        x = pd.read_csv(out / "X.csv")
        assert x.shape == (200, 4)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["extra"]["b0"] == 2.0

    def test_same_seed_same_data(self, tmp_path: Path, config_path: Path):
        """Test two simulations with one seed are identical"""
        for name in ("a", "b"):
            main(["simulate", "--config", str(config_path), "--out", str(tmp_path / name)])
        a = pd.read_csv(tmp_path / "a" / "X.csv")
        b = pd.read_csv(tmp_path / "b" / "X.csv")
        pd.testing.assert_frame_equal(a, b)

    def test_mask(self, masked_dir: Path):
        """Test mask writes R.csv and a mechanism report near the target rate"""
        mask = pd.read_csv(masked_dir / "R.csv").to_numpy()
        assert set(np.unique(mask)) <= {0, 1}
        assert np.all(mask[:, 2:] == 1)
        report = json.loads((masked_dir / "mechanism.json").read_text())
        assert all(abs(rate - 0.3) < 0.1 for rate in report["realized_missing_rates"])

    def test_mask_on_incomplete_data(self, tmp_path: Path, sample_csv: Path):
        """Test masking already incomplete (categorical) data fails in the mask stage"""
        config = _write_config(
            tmp_path / "csv.json",
            simulate=None,
            csv_path=str(sample_csv),
            ingest={"response": "outcome", "categorical": ["color"], "exclude": ["note"]},
            mechanism="mcar",
        )
        code = main(["mask", "--config", str(config), "--out", str(tmp_path / "m")])
        assert code == EXIT_CODES["mask"]

    def test_invalid_config(self, tmp_path: Path):
        """Test a simulation with too few rows exits with the configuration code"""
        config = _write_config(tmp_path / "bad.json", simulate={"n": 10, "p": 4, "d": 2})
        code = main(["simulate", "--config", str(config), "--out", str(tmp_path / "x")])
        assert code == EXIT_CODES["config"]

    def test_missing_config_file(self, tmp_path: Path):
        """Test an unreadable configuration file exits with the configuration code"""
        code = main(["run", "--config", str(tmp_path / "absent.json")])
        assert code == EXIT_CODES["config"]

    def test_missing_dataset_directory(self, tmp_path: Path, config_path: Path):
        """Test a dataset directory without manifest fails in the data stage"""
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main(["run", "--config", str(config_path), "--data", str(empty)])
        assert code == EXIT_CODES["data"]


@pytest.mark.integration
class TestRunCommands:
    """Test run and the model-file subcommands"""

    def test_run_dlglm(self, tmp_path: Path, config_path: Path, masked_dir: Path):
        """Test a full run writes every output and the metrics the truth allows"""
        out = tmp_path / "run"
        code = main(
            ["run", "--config", str(config_path), "--data", str(masked_dir), "--out", str(out)]
        )
        assert code == EXIT_OK
        for name in (
            "manifest.json",
            "leaderboard.csv",
            "epoch_log_0.csv",
            "model.json",
            "diagnostics.json",
            "imputed.csv",
            "predictions_predI.csv",
            "predictions_predC.csv",
            "coefficients.csv",
            "metrics.json",
            "results_long.csv",
        ):
            assert (out / name).exists(), name
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["imputation_l1"] is not None
        assert metrics["percent_bias"] is not None
        assert metrics["auc_predI"] is not None
        imputed = pd.read_csv(out / "imputed.csv")
        assert not imputed.isna().any().any()
        predictions = pd.read_csv(out / "predictions_predI.csv")
        assert list(predictions.columns) == ["row", "prob_1", "predicted_class"]
        assert len(predictions) == 20

    def test_run_then_reuse_model(self, tmp_path: Path, config_path: Path, masked_dir: Path):
        """Test impute, predict and evaluate against a saved model"""
        run = tmp_path / "run"
        data = ["--config", str(config_path), "--data", str(masked_dir)]
        assert main(["run", *data, "--out", str(run)]) == EXIT_OK
        model = str(run / "model.json")

        reuse = tmp_path / "reuse"
        assert main(["impute", *data, "--model", model, "--out", str(reuse)]) == EXIT_OK
        assert (reuse / "imputed.csv").exists()
        for mode in ("predI", "predC"):
            args = ["predict", *data, "--model", model, "--mode", mode, "--out", str(reuse)]
            assert main(args) == EXIT_OK
        assert main(["evaluate", *data, "--run-dir", str(reuse)]) == EXIT_OK
        metrics = json.loads((reuse / "metrics.json").read_text())
        assert metrics["imputation_l1"] is not None
        assert metrics["auc_predC"] is not None

    def test_run_is_deterministic(self, tmp_path: Path, config_path: Path, masked_dir: Path):
        """Test two runs of one configuration write identical metrics"""
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            args = ["run", "--config", str(config_path), "--data", str(masked_dir)]
            assert main([*args, "--out", str(out)]) == EXIT_OK
            outputs.append((out / "metrics.json").read_bytes())
        assert outputs[0] == outputs[1]

    def test_run_baseline(self, tmp_path: Path, masked_dir: Path):
        """Test the mean-imputation baseline writes coefficients and no model"""
        config = _write_config(tmp_path / "baseline.json", method="mean-baseline")
        out = tmp_path / "baseline"
        code = main(["run", "--config", str(config), "--data", str(masked_dir), "--out", str(out)])
        assert code == EXIT_OK
        assert not (out / "model.json").exists()
        coefficients = pd.read_csv(out / "coefficients.csv")
        assert coefficients["feature"].tolist() == ["(intercept)", "x1", "x2", "x3", "x4"]

    def test_run_simulates_and_masks(self, tmp_path: Path, config_path: Path):
        """Test run on a simulate block masks the data itself"""
        out = tmp_path / "run"
        assert main(["run", "--config", str(config_path), "--out", str(out)]) == EXIT_OK
        assert (out / "mechanism.json").exists()
        long = pd.read_csv(out / "results_long.csv")
        assert list(long.columns) == ["condition", "method", "metric", "value"]
        assert set(long["method"]) == {"dlglm"}


@pytest.mark.integration
class TestStageFailures:
    """Test failures inside run map to their stage's exit code"""

    def test_training_failure(self, mocker, tmp_path: Path, config_path: Path, masked_dir: Path):
        """Test a grid with no surviving configuration exits with the training code"""
        mocker.patch("cli.commands.grid_search", side_effect=GridSearchError({0: "diverged"}))
        args = ["run", "--config", str(config_path), "--data", str(masked_dir)]
        assert main([*args, "--out", str(tmp_path / "run")]) == EXIT_CODES["train"]

    def test_imputation_failure(self, mocker, tmp_path: Path, config_path: Path, masked_dir: Path):
        """Test an error while imputing exits with the inference code"""
        impute = mocker.patch("cli.commands.impute_single", side_effect=FloatingPointError("nan"))
        args = ["run", "--config", str(config_path), "--data", str(masked_dir)]
        assert main([*args, "--out", str(tmp_path / "run")]) == EXIT_CODES["inference"]
        impute.assert_called_once()

    def test_ignorable_mask_network_is_config_error(self, tmp_path: Path):
        """Test an unsupported method configuration exits before any training"""
        hp = {**SMALL_HYPERPARAMS, "nhl_r": 1}
        path = _write_config(tmp_path / "config.json", method="idlglm", hyperparams=hp)
        out = tmp_path / "run"
        assert main(["run", "--config", str(path), "--out", str(out)]) == EXIT_CODES["config"]
        assert not (out / "metrics.json").exists()

    def test_upper_case_mechanism(self, tmp_path: Path):
        """Test a mechanism written in capitals masks the data"""
        path = _write_config(tmp_path / "config.json", mechanism="MNAR")
        out = tmp_path / "masked"
        assert main(["mask", "--config", str(path), "--out", str(out)]) == EXIT_OK
        assert (out / "R.csv").exists()
