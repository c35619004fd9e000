"""
Architecture and optimization settings, and the model variants they apply to
"""

from enum import Enum

from pydantic import BaseModel, Field, model_validator

from config import settings


class MechanismAssumption(str, Enum):
    """MNAR models learn the mask; ignorable ones drop it from the likelihood"""

    MNAR = "mnar"
    IGNORABLE = "ignorable"


class CovariateModel(str, Enum):
    IWAE_LATENT = "iwae-latent"
    KNOWN_DIAGONAL_GAUSSIAN = "known-diagonal-gaussian"


class Method(str, Enum):
    DLGLM = "dlglm"
    IDLGLM = "idlglm"
    DLGLM_X = "dlglmX"
    IDLGLM_X = "idlglmX"
    MEAN_BASELINE = "mean-baseline"

    @property
    def is_network(self) -> bool:
        return self != Method.MEAN_BASELINE

    @property
    def assumption(self) -> MechanismAssumption:
        if self in (Method.DLGLM, Method.DLGLM_X):
            return MechanismAssumption.MNAR
        return MechanismAssumption.IGNORABLE

    @property
    def covariate_model(self) -> CovariateModel:
        if self in (Method.DLGLM_X, Method.IDLGLM_X):
            return CovariateModel.KNOWN_DIAGONAL_GAUSSIAN
        return CovariateModel.IWAE_LATENT


class Hyperparams(BaseModel):
    """
    Network widths and depths, latent size and training schedule.

    nhl / h size the encoder, imputer and decoder; nhl_r / h_r the mask
    network; nhl_y the GLM head (0 gives a traditional GLM).
    """

    h: int = Field(default=64, ge=1)
    h_r: int = Field(default=16, ge=0)
    nhl: int = Field(default=1, ge=0)
    nhl_y: int = Field(default=0, ge=0)
    nhl_r: int = Field(default=0, ge=0)
    dz: int = Field(default=2, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    bs: int = Field(default=1000, ge=1)
    k_train: int = Field(default=settings.k_train, ge=1)
    k_eval: int = Field(default=settings.k_eval, ge=1)
    epochs_max: int = Field(default=2002, ge=1)
    include_y_in_posterior: bool = False
    seed: int = 0
    tau: float = Field(default=1.0, gt=0)
    patience: int = Field(default=50, ge=1)
    epsilon: float = Field(
        default=1e-4,
        ge=0,
        description="Relative improvement threshold: a new best must beat L_opt by ε·|L_opt|",
    )
    literal_early_stop: bool = Field(
        default=False,
        description="Use the unsigned threshold ε·L_opt instead of ε·|L_opt|; with a "
        "negative bound only a drop larger than ε·|L_opt| counts as a stall",
    )

    @model_validator(mode="after")
    def _check_mask_width(self) -> "Hyperparams":
        if self.nhl_r > 0 and self.h_r < 1:
            raise ValueError("nhl_r > 0 needs h_r >= 1")
        return self

    def describe(self) -> str:
        return (
            f"h={self.h} h_r={self.h_r} nhl={self.nhl} nhl_y={self.nhl_y} nhl_r={self.nhl_r} "
            f"dz={self.dz} lr={self.lr}"
        )
