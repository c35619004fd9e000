"""
Logistic missingness mechanisms (MCAR / MAR / MNAR) and mask simulation
"""

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import optimize, special

from utils.errors import CalibrationError, MaskSimulationError

logger = logging.getLogger(__name__)

PHI_LOG_MEAN = math.log(5.0)
PHI_LOG_SD = 0.2
# φ0 used when the target missing rate is zero; σ(50) rounds to 1 in float64
SATURATED_PHI0 = 50.0


class MechanismKind(str, Enum):
    MCAR = "mcar"
    MAR = "mar"
    MNAR = "mnar"

    @classmethod
    def _missing_(cls, value: object) -> Optional["MechanismKind"]:
        if isinstance(value, str):
            for member in cls:
                if member.value == value.lower():
                    return member
        return None


class MechanismForm(str, Enum):
    LINEAR = "linear"
    NONLINEAR_LOG = "nonlinear-log"


class MechanismTemplate(BaseModel):
    """Which features go missing and which feature drives each mask"""

    kind: MechanismKind
    form: MechanismForm = MechanismForm.LINEAR
    p: int = Field(ge=1)
    miss_features: list[int]
    drivers: list[Optional[int]]
    target_missing_rate: float = Field(default=0.3, ge=0.0, lt=1.0)
    frac_features_missing: float = Field(default=0.5, gt=0.0, le=1.0)

    @property
    def obs_features(self) -> list[int]:
        missing = set(self.miss_features)
        return [j for j in range(self.p) if j not in missing]

    @model_validator(mode="after")
    def _check_drivers(self) -> "MechanismTemplate":
        if len(self.drivers) != len(self.miss_features):
            raise ValueError("One driver entry per missing-prone feature is required")
        if any(j < 0 or j >= self.p for j in self.miss_features):
            raise ValueError("Missing-prone feature index out of range")
        obs = set(self.obs_features)
        for feature, driver in zip(self.miss_features, self.drivers):
            if self.kind == MechanismKind.MCAR and driver is not None:
                raise ValueError("MCAR masks have no driver")
            if self.kind == MechanismKind.MAR and driver not in obs:
                raise ValueError(f"MAR driver of feature {feature} must be fully observed")
            if self.kind == MechanismKind.MNAR and driver != feature:
                raise ValueError(f"MNAR driver of feature {feature} must be the feature itself")
        return self


class MechanismSpec(BaseModel):
    """Template plus coefficients of logit p(r_j = 1 | x, y)"""

    template: MechanismTemplate
    phi0: list[float]
    phi1: float = 0.0
    phi2: list[list[float]]
    phi3: list[list[float]]

    @property
    def kind(self) -> MechanismKind:
        return self.template.kind

    @property
    def form(self) -> MechanismForm:
        return self.template.form

    @model_validator(mode="after")
    def _check_zero_pattern(self) -> "MechanismSpec":
        t = self.template
        n_miss, n_obs = len(t.miss_features), len(t.obs_features)
        if len(self.phi0) != n_miss:
            raise ValueError("phi0 needs one entry per missing-prone feature")
        if len(self.phi2) != n_miss or any(len(row) != n_obs for row in self.phi2):
            raise ValueError("phi2 must be (missing-prone x observed)")
        if len(self.phi3) != n_miss or any(len(row) != n_miss for row in self.phi3):
            raise ValueError("phi3 must be (missing-prone x missing-prone)")
        phi2 = np.asarray(self.phi2, dtype=np.float64).reshape(n_miss, n_obs)
        phi3 = np.asarray(self.phi3, dtype=np.float64).reshape(n_miss, n_miss)
        nonzero2 = (phi2 != 0).sum(axis=1)
        nonzero3 = (phi3 != 0).sum(axis=1)
        if t.kind == MechanismKind.MCAR:
            if self.phi1 != 0 or nonzero2.any() or nonzero3.any():
                raise ValueError("MCAR requires phi1 = phi2 = phi3 = 0")
        elif t.kind == MechanismKind.MAR:
            if nonzero3.any() or not np.all(nonzero2 == 1):
                raise ValueError("MAR requires phi3 = 0 and one nonzero phi2 per missing feature")
        elif not np.all(nonzero3 == 1):
            raise ValueError("MNAR requires one nonzero phi3 per missing feature")
        return self


def make_template(
    kind: MechanismKind,
    p: int,
    form: MechanismForm = MechanismForm.LINEAR,
    frac_features_missing: float = 0.5,
    target_missing_rate: float = 0.3,
) -> MechanismTemplate:
    """First ⌊frac·p⌋ features are missing-prone; MAR pairs each with an observed feature"""
    n_miss = int(math.floor(frac_features_missing * p))
    if n_miss < 1:
        raise ValueError(
            f"frac_features_missing={frac_features_missing} leaves no missing-prone feature"
        )
    miss = list(range(n_miss))
    obs = list(range(n_miss, p))
    drivers: list[Optional[int]]
    if kind == MechanismKind.MCAR:
        drivers = [None] * n_miss
    elif kind == MechanismKind.MAR:
        if not obs:
            raise ValueError("MAR needs at least one fully observed feature")
        drivers = [obs[i % len(obs)] for i in range(n_miss)]
    else:
        drivers = list(miss)
    return MechanismTemplate(
        kind=kind,
        form=form,
        p=p,
        miss_features=miss,
        drivers=drivers,
        target_missing_rate=target_missing_rate,
        frac_features_missing=frac_features_missing,
    )


def draw_phi(template: MechanismTemplate, rng: np.random.Generator) -> MechanismSpec:
    """Fill the nonzero coefficients with exp(N(ln 5, 0.2²)) draws; φ0 starts at 0"""
    miss, obs = template.miss_features, template.obs_features
    phi2 = np.zeros((len(miss), len(obs)))
    phi3 = np.zeros((len(miss), len(miss)))
    for i, driver in enumerate(template.drivers):
        if driver is None:
            continue
        magnitude = float(rng.lognormal(mean=PHI_LOG_MEAN, sigma=PHI_LOG_SD))
        if template.kind == MechanismKind.MAR:
            phi2[i, obs.index(driver)] = magnitude
        else:
            phi3[i, miss.index(driver)] = magnitude
    return MechanismSpec(
        template=template,
        phi0=[0.0] * len(miss),
        phi1=0.0,
        phi2=phi2.tolist(),
        phi3=phi3.tolist(),
    )


def transform_drivers(X: np.ndarray, form: MechanismForm) -> np.ndarray:
    """Covariates as they enter the logit; nonlinear-log uses log(x − min(x) + 1)"""
    X = np.asarray(X, dtype=np.float64)
    if form == MechanismForm.LINEAR:
        return X
    shifted = X - X.min(axis=0, keepdims=True) + 1.0
    if not np.all(np.isfinite(shifted)) or np.any(shifted <= 0):
        raise MaskSimulationError("Non-positive argument to log after min-shift")
    return np.log(shifted)


def _linear_terms(X: np.ndarray, y: Optional[np.ndarray], spec: MechanismSpec) -> np.ndarray:
    """(n, n_miss) logit contributions excluding φ0"""
    t = spec.template
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != t.p:
        raise MaskSimulationError(f"Expected X with {t.p} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise MaskSimulationError("X must be complete when simulating masks")
    Xt = transform_drivers(X, t.form)
    n_miss, n_obs = len(t.miss_features), len(t.obs_features)
    phi2 = np.asarray(spec.phi2, dtype=np.float64).reshape(n_miss, n_obs)
    phi3 = np.asarray(spec.phi3, dtype=np.float64).reshape(n_miss, n_miss)
    terms = Xt[:, t.obs_features] @ phi2.T + Xt[:, t.miss_features] @ phi3.T
    if spec.phi1 != 0:
        if y is None:
            raise MaskSimulationError("phi1 != 0 needs the response")
        terms = terms + spec.phi1 * np.asarray(y, dtype=np.float64)[:, None]
    return terms


def _solve_phi0(lin: np.ndarray, target: float, xtol: float = 1e-12) -> float:
    """φ0 such that mean σ(−(φ0 + lin)) = target; the rate decreases in φ0"""
    lower, upper = -float(np.max(lin)) - 40.0, -float(np.min(lin)) + 40.0

    def excess(phi0: float) -> float:
        return float(np.mean(special.expit(-(phi0 + lin)))) - target

    try:
        return float(optimize.brentq(excess, lower, upper, xtol=xtol))
    except ValueError as e:
        raise CalibrationError(
            f"Cannot bracket missing rate {target} in [{lower:.3g}, {upper:.3g}]"
        ) from e


def calibrate_phi0(X: np.ndarray, y: Optional[np.ndarray], spec: MechanismSpec) -> MechanismSpec:
    """Solve for φ0 per feature so the expected missing rate equals the target"""
    target = spec.template.target_missing_rate
    lin = _linear_terms(X, y, spec)
    if not np.all(np.isfinite(lin)):
        raise CalibrationError("Non-finite mechanism logits; coefficients are pathological")
    if target == 0.0:
        phi0 = [SATURATED_PHI0 - float(np.min(lin[:, j])) for j in range(lin.shape[1])]
    else:
        phi0 = [_solve_phi0(lin[:, j], target) for j in range(lin.shape[1])]
    logger.debug(f"Calibrated phi0={np.round(phi0, 4).tolist()} for target rate {target}")
    return spec.model_copy(update={"phi0": phi0})


def observation_probabilities(
    X: np.ndarray, y: Optional[np.ndarray], spec: MechanismSpec
) -> np.ndarray:
    """(n, n_miss) p(r_j = 1 | x, y)"""
    return special.expit(np.asarray(spec.phi0)[None, :] + _linear_terms(X, y, spec))


def simulate_mask(
    X: np.ndarray, y: Optional[np.ndarray], spec: MechanismSpec, rng: np.random.Generator
) -> np.ndarray:
    """n x p 0/1 mask (1 = observed); fully observed columns are all ones"""
    probs = observation_probabilities(X, y, spec)
    draws = rng.uniform(size=probs.shape)
    mask = np.ones((probs.shape[0], spec.template.p), dtype=np.int8)
    mask[:, spec.template.miss_features] = (draws < probs).astype(np.int8)
    return mask


def realized_missing_rates(mask: np.ndarray, spec: MechanismSpec) -> list[float]:
    """Empirical missing fraction of each missing-prone column"""
    return [float(1.0 - np.mean(mask[:, j])) for j in spec.template.miss_features]
