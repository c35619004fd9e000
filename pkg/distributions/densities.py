"""
Log-densities and reparameterized samplers used by the bounds.

Every function works on Tensors so gradients flow through parameters and,
for samplers, through the drawn values. Densities of vectors are summed over
the last axis.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from autodiff import Tensor, as_tensor
from utils.errors import ShapeMismatchError

LOG_SIGMA_MIN = -10.0
LOG_SIGMA_MAX = 10.0
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def sigma_from_log(log_sigma: Tensor) -> Tensor:
    """Positive scale from a network head emitting log σ"""
    return log_sigma.clip(LOG_SIGMA_MIN, LOG_SIGMA_MAX).exp()


@dataclass(frozen=True)
class DiagGaussian:
    """Gaussian with diagonal covariance"""

    mu: Tensor
    sigma: Tensor

    def __post_init__(self) -> None:
        if self.mu.shape != self.sigma.shape:
            raise ShapeMismatchError(f"mu {self.mu.shape} and sigma {self.sigma.shape} differ")


@dataclass(frozen=True)
class BernoulliLogit:
    logit: Tensor

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.logit.data)):
            raise ValueError("Bernoulli logits must be finite")


@dataclass(frozen=True)
class GumbelSoftmax:
    """Relaxed categorical over the last axis, stored as log class probabilities"""

    log_probs: Tensor
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ValueError(f"Temperature must be positive, got {self.temperature}")

    @classmethod
    def from_logits(cls, logits: Tensor, temperature: float = 1.0) -> "GumbelSoftmax":
        return cls(logits.log_softmax(axis=-1), temperature)

    @classmethod
    def from_probs(cls, probs: np.ndarray, temperature: float = 1.0) -> "GumbelSoftmax":
        probs = np.asarray(probs, dtype=np.float64)
        if np.any(probs < 0) or not np.allclose(probs.sum(axis=-1), 1.0, atol=1e-10):
            raise ValueError("Class probabilities must lie on the simplex")
        with np.errstate(divide="ignore"):
            return cls(Tensor(np.log(probs)), temperature)

    @property
    def class_probs(self) -> np.ndarray:
        return np.exp(self.log_probs.data)

    @property
    def n_classes(self) -> int:
        return self.log_probs.shape[-1]


def gaussian_log_density(x: Tensor, mu: Tensor, sigma: Tensor) -> Tensor:
    """Elementwise univariate normal log-density"""
    if np.any(sigma.data <= 0):
        raise ValueError("Gaussian sigma must be strictly positive")
    z = (as_tensor(x) - mu) / sigma
    return -0.5 * z * z - sigma.log() - HALF_LOG_2PI


def gaussian_logpdf(x: Tensor, dist: DiagGaussian) -> Tensor:
    """Diagonal Gaussian log-density, summed over the last axis"""
    x = as_tensor(x)
    if x.shape[-1] != dist.mu.shape[-1]:
        raise ShapeMismatchError(
            f"x has {x.shape[-1]} coordinates, distribution {dist.mu.shape[-1]}"
        )
    return gaussian_log_density(x, dist.mu, dist.sigma).sum(axis=-1)


def standard_normal_logpdf(z: Tensor) -> Tensor:
    """log N(z; 0, I), summed over the last axis"""
    return (-0.5 * z * z - HALF_LOG_2PI).sum(axis=-1)


def gaussian_rsample(dist: DiagGaussian, eps: np.ndarray) -> Tensor:
    """μ + σ ⊙ eps; eps may carry extra leading sample axes"""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape[-1] != dist.mu.shape[-1]:
        raise ShapeMismatchError(f"eps shape {eps.shape} does not match {dist.mu.shape}")
    return dist.mu + dist.sigma * eps


def _check_binary(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if not np.all((r == 0.0) | (r == 1.0)):
        raise ValueError("Bernoulli outcomes must be 0 or 1")
    return r


def bernoulli_logpmf(r: np.ndarray, logit: Tensor) -> Tensor:
    """Elementwise r·log σ(l) + (1−r)·log σ(−l)"""
    r = _check_binary(r)
    logit = as_tensor(logit)
    return r * logit.log_sigmoid() + (1.0 - r) * (-logit).log_sigmoid()


def gumbel_noise(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Standard Gumbel draws"""
    u = rng.uniform(low=np.finfo(np.float64).tiny, high=1.0, size=shape)
    return -np.log(-np.log(u))


def gumbel_softmax_sample(
    logits: Tensor, tau: float, rng: np.random.Generator, noise: Optional[np.ndarray] = None
) -> Tensor:
    """softmax((logits + g) / τ) over the last axis"""
    if tau <= 0:
        raise ValueError(f"Temperature must be positive, got {tau}")
    logits = as_tensor(logits)
    g = gumbel_noise(logits.shape, rng) if noise is None else np.asarray(noise, dtype=np.float64)
    return ((logits + g) / tau).softmax(axis=-1)


def gumbel_softmax_logpdf(x: Tensor, dist: GumbelSoftmax) -> Tensor:
    """Log-density of a relaxed one-hot sample, over the last axis"""
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise ValueError("Gumbel-Softmax density is defined only inside the simplex")
    n_classes = x.shape[-1]
    if n_classes != dist.n_classes:
        raise ShapeMismatchError(f"x has {n_classes} classes, distribution {dist.n_classes}")
    tau = dist.temperature
    log_x = x.log()
    normalizer = (dist.log_probs - tau * log_x).logsumexp(axis=-1)
    kernel = (dist.log_probs - (tau + 1.0) * log_x).sum(axis=-1)
    constant = float(special.gammaln(n_classes)) + (n_classes - 1) * math.log(tau)
    return constant - n_classes * normalizer + kernel
