"""
Pytest configuration and fixtures for dlglm tests
"""

from pathlib import Path
from unittest.mock import MagicMock

import numpy as np
import pytest

from config import Settings
from dataset import Dataset, SimConfig, simulate_xy, split_811
from missingness import MechanismKind, calibrate_phi0, draw_phi, make_template, simulate_mask
from models import (
    CovariateModel,
    DlglmModel,
    Hyperparams,
    MechanismAssumption,
    ModelSchema,
    build_model,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed generator for tests that need randomness"""
    return np.random.default_rng(12345)


@pytest.fixture
def mock_settings() -> MagicMock:
    """Settings with small importance-sampling defaults"""
    settings = MagicMock(spec=Settings)
    settings.k_train = 3
    settings.k_eval = 10
    settings.impute_chunk_size = 16
    settings.log_level = "DEBUG"
    return settings


@pytest.fixture
def sim_config() -> SimConfig:
    """Small simulation: 200 rows, 4 covariates, 2 latent dimensions"""
    return SimConfig(n=200, p=4, d=2, seed=7)


@pytest.fixture
def complete_dataset(sim_config: SimConfig) -> Dataset:
    """Complete simulated data, split 80/10/10"""
    dataset = simulate_xy(sim_config, np.random.default_rng(1))
    return split_811(dataset, np.random.default_rng(2))


def _masked(dataset: Dataset, kind: MechanismKind, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    template = make_template(kind, dataset.n_columns, target_missing_rate=0.3)
    assert dataset.x_true is not None
    spec = calibrate_phi0(dataset.x_true, dataset.y, draw_phi(template, rng))
    return dataset.with_mask(simulate_mask(dataset.x_true, dataset.y, spec, rng))


@pytest.fixture
def mnar_dataset(complete_dataset: Dataset) -> Dataset:
    """First two covariates masked under a self-masking MNAR mechanism"""
    return _masked(complete_dataset, MechanismKind.MNAR, 3)


@pytest.fixture
def mcar_dataset(complete_dataset: Dataset) -> Dataset:
    return _masked(complete_dataset, MechanismKind.MCAR, 4)


@pytest.fixture
def tiny_hp() -> Hyperparams:
    """Hyperparameters small enough for a few fast epochs"""
    return Hyperparams(
        h=8,
        h_r=4,
        nhl=1,
        nhl_r=0,
        dz=2,
        lr=0.01,
        bs=64,
        k_train=3,
        k_eval=10,
        epochs_max=3,
        patience=5,
    )


@pytest.fixture
def mnar_model(mnar_dataset: Dataset, tiny_hp: Hyperparams) -> DlglmModel:
    return build_model(
        tiny_hp,
        ModelSchema.from_dataset(mnar_dataset),
        MechanismAssumption.MNAR,
        CovariateModel.IWAE_LATENT,
        rng=np.random.default_rng(0),
    )


@pytest.fixture
def ignorable_model(mnar_dataset: Dataset, tiny_hp: Hyperparams) -> DlglmModel:
    return build_model(
        tiny_hp,
        ModelSchema.from_dataset(mnar_dataset),
        MechanismAssumption.IGNORABLE,
        CovariateModel.IWAE_LATENT,
        rng=np.random.default_rng(0),
    )


@pytest.fixture
def sample_csv() -> Path:
    """Mixed continuous/categorical CSV with NA tokens and a sentinel"""
    return FIXTURES / "sample_data.csv"


# Pytest markers
def pytest_configure(config):
    """Configure custom pytest markers"""
    config.addinivalue_line("markers", "slow: mark test as slow running")
    config.addinivalue_line("markers", "integration: mark test as integration test")
    config.addinivalue_line("markers", "unit: mark test as unit test")
