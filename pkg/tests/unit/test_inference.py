"""
Unit tests for imputation, prediction and the mean-imputation baseline
"""

from dataclasses import replace

import numpy as np
import pytest
from scipy import special

from dataset import Dataset, FeatureColumn, FeatureKind, Split, split_811
from glm import Family
from inference import (
    ImportanceWeights,
    PredictionMode,
    effective_sample_size,
    harden,
    imputation,
    impute_single,
    mean_impute_baseline,
    predict,
    training_fill_values,
    weighted_completion,
)
from models import (
    CovariateModel,
    DlglmModel,
    Hyperparams,
    MechanismAssumption,
    ModelSchema,
    build_model,
)


@pytest.fixture
def mixed_dataset() -> Dataset:
    """One continuous and one three-level categorical feature, both partly missing"""
    rng = np.random.default_rng(21)
    n = 200
    cont = rng.standard_normal(n)
    levels = rng.integers(0, 3, n)
    x = np.column_stack((cont, np.eye(3)[levels]))
    y = (rng.uniform(size=n) < special.expit(0.5 * cont)).astype(float)
    mask = np.ones((n, 4), dtype=np.int8)
    mask[rng.choice(n, 30, replace=False), 0] = 0
    mask[rng.choice(n, 30, replace=False), 1:] = 0
    features = [
        FeatureColumn("a", FeatureKind.CONTINUOUS, 0, 1),
        FeatureColumn("c", FeatureKind.CATEGORICAL, 1, 4, ("l0", "l1", "l2")),
    ]
    dataset = Dataset(
        x=np.where(mask == 1, x, np.nan),
        y=y,
        mask=mask,
        features=features,
        family=Family.bernoulli(),
        x_true=x,
    )
    return split_811(dataset, np.random.default_rng(22))


@pytest.fixture
def mixed_model(mixed_dataset: Dataset, tiny_hp: Hyperparams) -> DlglmModel:
    return build_model(
        tiny_hp,
        ModelSchema.from_dataset(mixed_dataset),
        MechanismAssumption.MNAR,
        CovariateModel.IWAE_LATENT,
        rng=np.random.default_rng(0),
    )


@pytest.mark.unit
class TestImportanceWeights:
    """Test weight normalization and effective sample size"""

    def test_uniform_and_degenerate(self):
        """Test equal weights give ESS = K and a single weight gives 1"""
        np.testing.assert_allclose(effective_sample_size(np.full((1, 8), 1 / 8)), [8.0])
        np.testing.assert_allclose(effective_sample_size(np.array([[0.0, 1.0, 0.0]])), [1.0])

    def test_from_log_scores(self):
        """Test huge log-scores normalize without overflow"""
        weights = ImportanceWeights.from_log_scores(np.array([[1000.0, 1000.0], [0.0, -800.0]]))
        np.testing.assert_allclose(weights.weights.sum(axis=1), 1.0)
        np.testing.assert_allclose(weights.weights[0], [0.5, 0.5])
        assert weights.k == 2

    def test_weighted_completion(self, mnar_model: DlglmModel):
        """Test masked entries get the weighted mean and observed entries are kept"""
        x_observed = np.array([[1.0, 0.0, 3.0, 4.0]])
        mask = np.array([[1, 0, 1, 1]])
        samples = np.stack([np.full((1, 4), 2.0), np.full((1, 4), 6.0)])
        out = weighted_completion(mnar_model, x_observed, mask, samples, np.array([[0.25, 0.75]]))
        np.testing.assert_allclose(out, [[1.0, 5.0, 3.0, 4.0]])


@pytest.mark.unit
class TestImputation:
    """Test single imputation by importance sampling"""

    def test_observed_values_unchanged(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test imputation fills every masked entry and keeps every observed one"""
        result = impute_single(mnar_model, mnar_dataset, 5, np.random.default_rng(0))
        observed = mnar_dataset.mask == 1
        np.testing.assert_array_equal(result.x[observed], mnar_dataset.x[observed])
        assert np.all(np.isfinite(result.x))
        assert result.x.shape == mnar_dataset.x.shape

    def test_ess_bounds(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test the effective sample size lies in [1, K]"""
        result = impute_single(mnar_model, mnar_dataset, 6, np.random.default_rng(1))
        assert np.all(result.ess >= 1.0 - 1e-9)
        assert np.all(result.ess <= 6.0 + 1e-9)
        assert 1.0 <= result.min_ess <= result.mean_ess

    def test_chunking_and_rows(self, ignorable_model: DlglmModel, mnar_dataset: Dataset):
        """Test a row subset in small chunks returns one completion per row"""
        rows = mnar_dataset.rows(Split.TEST)
        result = impute_single(
            ignorable_model,
            mnar_dataset,
            4,
            np.random.default_rng(2),
            rows=rows,
            chunk_size=7,
            keep_weights=True,
        )
        assert result.x.shape == (len(rows), 4)
        np.testing.assert_array_equal(result.rows, rows)
        assert result.weights is not None
        assert result.weights.weights.shape == (len(rows), 4)

    def test_default_chunk_size_from_settings(
        self, mocker, mock_settings, ignorable_model: DlglmModel, mnar_dataset: Dataset
    ):
        """Test rows are scored in chunks of the configured size"""
        mocker.patch("inference.imputation.settings", mock_settings)
        spy = mocker.spy(imputation, "sample_terms")
        result = impute_single(ignorable_model, mnar_dataset, 2, np.random.default_rng(5))
        assert result.x.shape == mnar_dataset.x.shape
        assert spy.call_count == -(-mnar_dataset.n_rows // mock_settings.impute_chunk_size)

    def test_without_response(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test dropping p(y | x) from the scores still imputes"""
        result = impute_single(mnar_model, mnar_dataset, 3, np.random.default_rng(3), use_y=False)
        assert np.all(np.isfinite(result.x))

    def test_categorical_imputed_as_one_hot(self, mixed_model: DlglmModel, mixed_dataset: Dataset):
        """Test imputed categorical blocks are exact one-hot vectors"""
        result = impute_single(mixed_model, mixed_dataset, 5, np.random.default_rng(4))
        block = result.x[:, 1:]
        np.testing.assert_array_equal(block.sum(axis=1), 1.0)
        assert set(np.unique(block)) <= {0.0, 1.0}

    def test_invalid_k(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test K = 0 is refused"""
        with pytest.raises(ValueError):
            impute_single(mnar_model, mnar_dataset, 0, np.random.default_rng(0))


@pytest.mark.unit
class TestPrediction:
    """Test predC and predI"""

    def test_pred_c(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test predC uses the complete covariates and returns probabilities"""
        result = predict(mnar_model, mnar_dataset, 1, PredictionMode.PRED_C)
        assert result.mean.shape == (mnar_dataset.n_rows,)
        assert np.all((result.mean > 0) & (result.mean < 1))
        assert result.probabilities.shape == (mnar_dataset.n_rows, 2)
        np.testing.assert_array_equal(result.classes, (result.mean > 0.5).astype(int))

    def test_pred_i_matches_pred_c_on_complete_rows(
        self, mnar_model: DlglmModel, mnar_dataset: Dataset
    ):
        """Test complete rows need no sampling, so both modes agree there"""
        pred_c = predict(mnar_model, mnar_dataset, 1, PredictionMode.PRED_C)
        pred_i = predict(
            mnar_model, mnar_dataset, 5, PredictionMode.PRED_I, rng=np.random.default_rng(0)
        )
        complete = (mnar_dataset.mask == 1).all(axis=1)
        np.testing.assert_allclose(pred_i.mean[complete], pred_c.mean[complete])
        assert np.all((pred_i.mean > 0) & (pred_i.mean < 1))

    def test_pred_i_ignores_response(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test flipping every response leaves predI unchanged"""
        flipped = replace(mnar_dataset, y=1.0 - mnar_dataset.y)
        a = predict(mnar_model, mnar_dataset, 4, PredictionMode.PRED_I, np.random.default_rng(5))
        b = predict(mnar_model, flipped, 4, PredictionMode.PRED_I, np.random.default_rng(5))
        np.testing.assert_allclose(a.mean, b.mean)

    def test_pred_i_categorical_features(self, mixed_model: DlglmModel, mixed_dataset: Dataset):
        """Test predI over rows with missing categorical values"""
        result = predict(
            mixed_model, mixed_dataset, 4, PredictionMode.PRED_I, np.random.default_rng(6)
        )
        assert np.all(np.isfinite(result.mean))

    def test_pred_c_needs_complete_covariates(self, mnar_model: DlglmModel, mnar_dataset: Dataset):
        """Test predC without true covariates on incomplete rows raises"""
        unknown = replace(mnar_dataset, x_true=None)
        with pytest.raises(ValueError):
            predict(mnar_model, unknown, 1, PredictionMode.PRED_C)

    def test_harden(self, mixed_model: DlglmModel):
        """Test relaxed categorical blocks become one-hot and continuous values are kept"""
        x = np.array([[0.7, 0.2, 0.5, 0.3], [-1.0, 0.1, 0.1, 0.8]])
        out = harden(x, mixed_model)
        np.testing.assert_array_equal(out[:, 1:], [[0, 1, 0], [0, 0, 1]])
        np.testing.assert_array_equal(out[:, 0], x[:, 0])


@pytest.mark.unit
class TestMeanImputeBaseline:
    """Test the mean-imputation baseline"""

    def test_fill_values(self, mnar_dataset: Dataset):
        """Test continuous fills are the observed training means"""
        fill = training_fill_values(mnar_dataset)
        train = mnar_dataset.rows(Split.TRAIN)
        observed = mnar_dataset.mask[train, 0] == 1
        assert fill[0] == pytest.approx(mnar_dataset.x[train, 0][observed].mean())

    def test_categorical_fill_is_mode(self, mixed_dataset: Dataset):
        """Test categorical fills are the one-hot of the training mode"""
        fill = training_fill_values(mixed_dataset)
        assert fill[1:].sum() == 1.0
        train = mixed_dataset.rows(Split.TRAIN)
        observed = train[mixed_dataset.mask[train, 1] == 1]
        mode = np.argmax(mixed_dataset.x[observed, 1:].sum(axis=0))
        assert fill[1 + mode] == 1.0

    def test_baseline_fit(self, mnar_dataset: Dataset):
        """Test every entry is filled and the fitted GLM gives probabilities"""
        result = mean_impute_baseline(mnar_dataset)
        assert not np.isnan(result.dataset.x).any()
        assert np.all(result.dataset.mask == 1)
        assert result.beta.shape == (4,)
        probs = result.predict(result.dataset.x)
        assert np.all((probs > 0) & (probs < 1))

    def test_reference_level_dropped(self, mixed_dataset: Dataset):
        """Test the first level of each categorical feature gets a zero coefficient"""
        result = mean_impute_baseline(mixed_dataset)
        assert result.beta[1] == 0.0
        assert np.all(np.isfinite(result.beta))
