"""
Exponential-family response models with canonical links
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import special

from autodiff import Tensor, as_tensor

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class FamilyKind(str, Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Family:
    """Response family; gaussian dispersion is a trainable model parameter"""

    kind: FamilyKind
    class_count: int = 2

    def __post_init__(self) -> None:
        if self.kind == FamilyKind.CATEGORICAL and self.class_count < 3:
            raise ValueError("Categorical family needs at least 3 classes")
        if self.kind == FamilyKind.BERNOULLI and self.class_count != 2:
            raise ValueError("Bernoulli family has exactly 2 classes")

    @classmethod
    def gaussian(cls) -> "Family":
        return cls(FamilyKind.GAUSSIAN, 1)

    @classmethod
    def bernoulli(cls) -> "Family":
        return cls(FamilyKind.BERNOULLI, 2)

    @classmethod
    def categorical(cls, class_count: int) -> "Family":
        return cls(FamilyKind.CATEGORICAL, class_count)

    @property
    def n_outputs(self) -> int:
        """Width of the linear predictor"""
        return self.class_count if self.kind == FamilyKind.CATEGORICAL else 1

    @property
    def is_classification(self) -> bool:
        return self.kind != FamilyKind.GAUSSIAN

    @property
    def has_dispersion(self) -> bool:
        return self.kind == FamilyKind.GAUSSIAN


def inverse_link(eta: np.ndarray, family: Family) -> np.ndarray:
    """Response-scale mean g⁻¹(η)"""
    eta = np.asarray(eta, dtype=np.float64)
    if family.kind == FamilyKind.GAUSSIAN:
        return eta.copy()
    if family.kind == FamilyKind.BERNOULLI:
        return special.expit(eta)
    return special.softmax(eta, axis=-1)


def link(mu: np.ndarray, family: Family) -> np.ndarray:
    """Canonical link g(μ); categorical uses the centred log-ratio"""
    mu = np.asarray(mu, dtype=np.float64)
    if family.kind == FamilyKind.GAUSSIAN:
        return mu.copy()
    if family.kind == FamilyKind.BERNOULLI:
        return special.logit(mu)
    log_mu = np.log(mu)
    return log_mu - log_mu.mean(axis=-1, keepdims=True)


def validate_response(y: np.ndarray, family: Family) -> np.ndarray:
    """Return y as float64 after checking it is valid for the family"""
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("Response contains missing or non-finite values")
    if family.kind == FamilyKind.BERNOULLI and not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("Bernoulli response must be 0 or 1")
    if family.kind == FamilyKind.CATEGORICAL:
        if not np.all((y == np.round(y)) & (y >= 0) & (y < family.class_count)):
            raise ValueError(
                f"Categorical response must be class indices in 0..{family.class_count - 1}"
            )
    return y


def y_loglik(y: np.ndarray, eta: Tensor, family: Family, alpha: Optional[Tensor] = None) -> Tensor:
    """
    Per-row log p(y | η).

    eta has shape (n, n_outputs); alpha is the gaussian variance and is
    ignored for the unit-dispersion families.
    """
    y = validate_response(y, family)
    eta = as_tensor(eta)
    if family.kind == FamilyKind.CATEGORICAL:
        log_probs = eta.log_softmax(axis=-1)
        return log_probs[np.arange(len(y)), y.astype(np.int64)]

    mean = eta[:, 0] if eta.ndim == 2 else eta
    if family.kind == FamilyKind.BERNOULLI:
        return y * mean.log_sigmoid() + (1.0 - y) * (-mean).log_sigmoid()

    variance = as_tensor(1.0) if alpha is None else as_tensor(alpha)
    if np.any(variance.data <= 0):
        raise ValueError("Gaussian dispersion must be positive")
    resid = y - mean
    return -0.5 * variance.log() - HALF_LOG_2PI - resid * resid / (2.0 * variance)
