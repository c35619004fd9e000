"""
Unit tests for response families, the GLM head and classical fits
"""

import numpy as np
import pytest
from scipy import special, stats

from autodiff import ParameterStore, Tensor
from glm import (
    Family,
    FamilyKind,
    GlmHead,
    coefficient_table,
    extract_coefficients,
    glm_head_forward,
    inverse_link,
    irls_fit,
    least_squares_fit,
    link,
    multinomial_fit,
    validate_response,
    y_loglik,
)
from utils.errors import SeparationError, ShapeMismatchError, SingularMatrixError


@pytest.mark.unit
class TestFamily:
    """Test family construction and links"""

    def test_class_counts(self):
        """Test invalid class counts are refused"""
        with pytest.raises(ValueError):
            Family(FamilyKind.CATEGORICAL, 2)
        with pytest.raises(ValueError):
            Family(FamilyKind.BERNOULLI, 3)
        assert Family.categorical(4).n_outputs == 4
        assert Family.bernoulli().n_outputs == 1

    @pytest.mark.parametrize(
        "family", [Family.gaussian(), Family.bernoulli(), Family.categorical(3)]
    )
    def test_link_inverts_inverse_link(self, family: Family, rng: np.random.Generator):
        """Test g(g⁻¹(η)) recovers η (categorical up to a shift)"""
        eta = rng.standard_normal((5, family.n_outputs))
        if family.n_outputs == 1:
            eta = eta[:, 0]
        back = link(inverse_link(eta, family), family)
        if family.kind == FamilyKind.CATEGORICAL:
            eta = eta - eta.mean(axis=-1, keepdims=True)
        np.testing.assert_allclose(back, eta, atol=1e-10)

    def test_validate_response(self):
        """Test malformed responses raise"""
        with pytest.raises(ValueError):
            validate_response(np.array([0.0, 2.0]), Family.bernoulli())
        with pytest.raises(ValueError):
            validate_response(np.array([0.0, 3.0]), Family.categorical(3))
        with pytest.raises(ValueError):
            validate_response(np.array([np.nan]), Family.gaussian())


@pytest.mark.unit
class TestYLoglik:
    """Test per-row response log-likelihoods"""

    def test_bernoulli(self, rng: np.random.Generator):
        """Test against scipy's Bernoulli pmf"""
        eta = rng.standard_normal(6)
        y = np.array([0, 1, 1, 0, 1, 0], dtype=float)
        got = y_loglik(y, Tensor(eta[:, None]), Family.bernoulli()).data
        np.testing.assert_allclose(got, stats.bernoulli.logpmf(y, special.expit(eta)))

    def test_gaussian_with_dispersion(self, rng: np.random.Generator):
        """Test the Gaussian with variance alpha"""
        eta, y = rng.standard_normal(4), rng.standard_normal(4)
        got = y_loglik(y, Tensor(eta[:, None]), Family.gaussian(), Tensor(np.array(2.5))).data
        np.testing.assert_allclose(got, stats.norm.logpdf(y, eta, np.sqrt(2.5)))

    def test_categorical(self, rng: np.random.Generator):
        """Test the log-softmax entry of the observed class"""
        eta = rng.standard_normal((4, 3))
        y = np.array([0, 2, 1, 2], dtype=float)
        got = y_loglik(y, Tensor(eta), Family.categorical(3)).data
        expected = special.log_softmax(eta, axis=1)[np.arange(4), y.astype(int)]
        np.testing.assert_allclose(got, expected)

    def test_gradient_reaches_eta(self):
        """Test d/dη of the Bernoulli log-likelihood is y − σ(η)"""
        eta = Tensor(np.array([[0.3], [-1.0]]), requires_grad=True)
        y = np.array([1.0, 0.0])
        y_loglik(y, eta, Family.bernoulli()).sum().backward()
        np.testing.assert_allclose(eta.grad[:, 0], y - special.expit(eta.data[:, 0]))


@pytest.mark.unit
class TestGlmHead:
    """Test the deeply-learned GLM head"""

    def test_affine_head_coefficients(self, rng: np.random.Generator):
        """Test nhl_y = 0 gives η = xβ + β0 with extractable coefficients"""
        head = GlmHead(ParameterStore(), 3, Family.bernoulli(), 0, 8, rng)
        beta, beta0 = extract_coefficients(head)
        assert beta.shape == (3,)
        x = rng.standard_normal((5, 3))
        np.testing.assert_allclose(head(Tensor(x)).data[:, 0], x @ beta + beta0)

    def test_single_row_forward(self, rng: np.random.Generator):
        """Test a 1-D row returns one linear predictor per output"""
        head = GlmHead(ParameterStore(), 3, Family.categorical(4), 1, 8, rng)
        assert glm_head_forward(Tensor(np.ones(3)), head).shape == (4,)
        with pytest.raises(ShapeMismatchError):
            glm_head_forward(Tensor(np.ones(2)), head)

    def test_coefficient_table(self):
        """Test the intercept comes first"""
        rows = coefficient_table(np.array([0.5, -1.0]), 0.25, ["a", "b"])
        assert rows == [("(intercept)", 0.25), ("a", 0.5), ("b", -1.0)]


@pytest.mark.unit
class TestClassicalFits:
    """Test IRLS, least squares and multinomial Newton"""

    def test_irls_recovers_coefficients(self):
        """Test logistic MLE is close to the generating coefficients"""
        rng = np.random.default_rng(0)
        X = rng.standard_normal((4000, 2))
        y = (rng.uniform(size=4000) < special.expit(0.5 + X @ np.array([1.0, -2.0]))).astype(float)
        beta, beta0 = irls_fit(X, y)
        np.testing.assert_allclose(beta, [1.0, -2.0], atol=0.15)
        assert beta0 == pytest.approx(0.5, abs=0.15)

    def test_irls_detects_separation(self):
        """Test perfectly separable classes raise"""
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        with pytest.raises((SeparationError, SingularMatrixError)):
            irls_fit(X, y)

    def test_irls_rejects_missing(self):
        """Test NaN covariates are refused"""
        with pytest.raises(ValueError):
            irls_fit(np.array([[np.nan], [1.0]]), np.array([0.0, 1.0]))

    def test_least_squares(self, rng: np.random.Generator):
        """Test OLS is exact on noiseless data and refuses collinear columns"""
        X = rng.standard_normal((20, 2))
        beta, beta0 = least_squares_fit(X, 1.0 + X @ np.array([2.0, -1.0]))
        np.testing.assert_allclose(beta, [2.0, -1.0])
        assert beta0 == pytest.approx(1.0)
        with pytest.raises(SingularMatrixError):
            least_squares_fit(np.column_stack((X[:, 0], X[:, 0])), X[:, 1])

    def test_multinomial_reference_class(self):
        """Test class 0 is the reference and probabilities match the data"""
        rng = np.random.default_rng(1)
        X = rng.standard_normal((3000, 1))
        eta = np.column_stack((np.zeros(3000), 1.0 + X[:, 0], -0.5 - X[:, 0]))
        probs = special.softmax(eta, axis=1)
        y = np.array([rng.choice(3, p=p) for p in probs], dtype=float)
        beta, beta0 = multinomial_fit(X, y, 3)
        assert beta.shape == (1, 3)
        np.testing.assert_allclose(beta[:, 0], 0.0)
        assert beta0[0] == 0.0
        np.testing.assert_allclose(beta[0, 1:], [1.0, -1.0], atol=0.2)
        np.testing.assert_allclose(beta0[1:], [1.0, -0.5], atol=0.2)
