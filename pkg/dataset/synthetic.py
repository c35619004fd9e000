"""
Synthetic covariates from a low-rank Gaussian model and a logistic response
"""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import optimize, special

from glm import Family
from utils.errors import CalibrationError

from .dataset import Dataset, SimulationTruth
from .schema import continuous_features

logger = logging.getLogger(__name__)


class SimConfig(BaseModel):
    """Settings of the simulated X = normalize(ZW + B) + B0 and Y | X"""

    n: int = Field(ge=10)
    p: int = Field(ge=1)
    d: int = Field(ge=1)
    b0: float = 2.0
    beta_value: float = 0.25
    random_sign_beta: bool = False
    w_scale: float = Field(default=0.5, gt=0)
    w_sd_is_variance: bool = True
    b_sd: float = Field(default=1.0, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_sizes(self) -> "SimConfig":
        if self.d > self.p:
            raise ValueError(f"Latent dimension d={self.d} exceeds p={self.p}")
        if self.n < 10 * self.p:
            raise ValueError(f"n={self.n} is below 10 x p={10 * self.p}")
        return self

    @property
    def w_sd(self) -> float:
        """Standard deviation of W entries; w_scale is a variance unless the flag is off"""
        return math.sqrt(self.w_scale) if self.w_sd_is_variance else self.w_scale


def normalize_columns(A: np.ndarray) -> np.ndarray:
    """Columns scaled to mean 0 and (population) standard deviation 1"""
    centred = A - A.mean(axis=0, keepdims=True)
    return centred / centred.std(axis=0, keepdims=True)


def calibrate_intercept(eta: np.ndarray, target: float = 0.5, xtol: float = 1e-12) -> float:
    """β0 with mean σ(β0 + η) = target"""
    lower, upper = -float(np.max(eta)) - 40.0, -float(np.min(eta)) + 40.0

    def excess(beta0: float) -> float:
        return float(np.mean(special.expit(beta0 + eta))) - target

    try:
        return float(optimize.brentq(excess, lower, upper, xtol=xtol))
    except ValueError as e:
        raise CalibrationError(f"Cannot bracket mean probability {target}") from e


def simulate_xy(config: SimConfig, rng: Optional[np.random.Generator] = None) -> Dataset:
    """Complete, unsplit dataset with its generating truth"""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    n, p, d = config.n, config.p, config.d

    Z = rng.standard_normal((n, d))
    W = rng.normal(0.0, config.w_sd, size=(d, p))
    B = rng.normal(0.0, config.b_sd, size=(n, p))
    X = normalize_columns(Z @ W + B) + config.b0

    if config.random_sign_beta:
        beta = rng.choice([-config.beta_value, config.beta_value], size=p)
    else:
        beta = np.full(p, config.beta_value)
    eta = X @ beta
    beta0 = calibrate_intercept(eta)
    prob = special.expit(beta0 + eta)
    y = (rng.uniform(size=n) < prob).astype(np.float64)
    logger.info(f"Simulated n={n}, p={p}, d={d}: beta0={beta0:.4f}, mean(Y)={y.mean():.3f}")

    names = [f"x{j + 1}" for j in range(p)]
    return Dataset(
        x=X,
        y=y,
        mask=np.ones((n, p), dtype=np.int8),
        features=continuous_features(names),
        family=Family.bernoulli(),
        response_name="y",
        x_true=X.copy(),
        truth=SimulationTruth(beta=beta, beta0=beta0, prob=prob),
        seed=config.seed,
    )
