"""
The dlglm network bundle: encoder, imputer, decoder, GLM head and mask network
"""

import logging
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from autodiff import Mlp, ParameterStore, Tensor, network_maker
from dataset import Dataset, FeatureColumn, FeatureKind
from glm import Family, FamilyKind, GlmHead
from utils.errors import UnsupportedConfigurationError

from .hyperparams import CovariateModel, Hyperparams, MechanismAssumption

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelSchema:
    """Column layout, response family and the source features that can be missing"""

    features: tuple[FeatureColumn, ...]
    family: Family
    missing_prone: tuple[int, ...]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "ModelSchema":
        prone = tuple(
            i for i, f in enumerate(dataset.features) if (dataset.mask[:, f.start] == 0).any()
        )
        return cls(tuple(dataset.features), dataset.family, prone)

    @property
    def p(self) -> int:
        """Encoded covariate width"""
        return self.features[-1].stop

    @property
    def miss_features(self) -> list[FeatureColumn]:
        return [self.features[i] for i in self.missing_prone]

    @property
    def miss_columns(self) -> list[int]:
        """Encoded columns of the missing-prone features"""
        return [j for f in self.miss_features for j in range(f.start, f.stop)]

    @property
    def n_missing_prone(self) -> int:
        return len(self.missing_prone)

    @property
    def has_categorical(self) -> bool:
        return any(f.kind == FeatureKind.CATEGORICAL for f in self.features)

    @property
    def y_width(self) -> int:
        """Width of the response when fed to a network (one-hot for categorical)"""
        return self.family.class_count if self.family.kind == FamilyKind.CATEGORICAL else 1

    def y_features(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        if self.family.kind == FamilyKind.CATEGORICAL:
            return np.eye(self.family.class_count)[y.astype(np.int64)]
        return y[:, None]

    def to_dict(self) -> dict[str, Any]:
        return {
            "features": [f.to_dict() for f in self.features],
            "family": self.family.kind.value,
            "class_count": self.family.class_count,
            "missing_prone": list(self.missing_prone),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelSchema":
        return cls(
            tuple(FeatureColumn.from_dict(f) for f in data["features"]),
            Family(FamilyKind(data["family"]), int(data["class_count"])),
            tuple(int(i) for i in data["missing_prone"]),
        )


def _param_width(feature: FeatureColumn) -> int:
    """Distribution parameters per feature: (μ, log σ) or C logits"""
    return 2 if feature.kind == FeatureKind.CONTINUOUS else feature.width


class DlglmModel:
    """
    All trainable parts of one model, registered in a single ParameterStore.

    Networks that a variant does not use are None: ignorable models have no
    mask network, known-diagonal-gaussian models have no encoder or decoder
    and carry ψ = (μ, log σ) instead.
    """

    def __init__(
        self,
        hp: Hyperparams,
        schema: ModelSchema,
        assumption: MechanismAssumption,
        covariate_model: CovariateModel,
    ):
        self.hp = hp
        self.schema = schema
        self.assumption = assumption
        self.covariate_model = covariate_model
        self.store = ParameterStore()
        self.encoder: Optional[Mlp] = None
        self.decoder: Optional[Mlp] = None
        self.imputer: Optional[Mlp] = None
        self.mask_net: Optional[Mlp] = None
        self.head: Optional[GlmHead] = None
        self.log_alpha: Optional[Tensor] = None
        self.psi_mu: Optional[Tensor] = None
        self.psi_log_sigma: Optional[Tensor] = None

    @property
    def is_mnar(self) -> bool:
        return self.assumption == MechanismAssumption.MNAR

    @property
    def is_latent(self) -> bool:
        return self.covariate_model == CovariateModel.IWAE_LATENT

    @property
    def method_name(self) -> str:
        prefix = "dlglm" if self.is_mnar else "idlglm"
        return prefix if self.is_latent else f"{prefix}X"

    @property
    def alpha(self) -> Optional[Tensor]:
        return None if self.log_alpha is None else self.log_alpha.exp()

    def n_parameters(self) -> int:
        return self.store.n_parameters()

    def imputer_in_features(self) -> int:
        width = self.schema.p
        if self.is_latent:
            width += self.hp.dz
        if self.is_mnar:
            width += len(self.schema.miss_columns)
        if self.hp.include_y_in_posterior:
            width += self.schema.y_width
        return width

    def mask_in_features(self) -> int:
        return self.schema.p + (self.schema.y_width if self.hp.include_y_in_posterior else 0)


def build_model(
    hp: Hyperparams,
    schema: ModelSchema,
    assumption: MechanismAssumption,
    covariate_model: CovariateModel,
    rng: Optional[np.random.Generator] = None,
) -> DlglmModel:
    """Create and semi-orthogonally initialize every network the variant needs"""
    if assumption == MechanismAssumption.IGNORABLE and hp.nhl_r > 0:
        raise UnsupportedConfigurationError(
            "Ignorable models have no mask network; nhl_r must be 0"
        )
    if covariate_model == CovariateModel.KNOWN_DIAGONAL_GAUSSIAN and schema.has_categorical:
        raise UnsupportedConfigurationError(
            "Known diagonal-Gaussian covariate model supports continuous covariates only"
        )
    rng = rng if rng is not None else np.random.default_rng(hp.seed)
    model = DlglmModel(hp, schema, assumption, covariate_model)
    store = model.store
    p = schema.p

    if model.is_latent:
        model.encoder = network_maker(store, "encoder", hp.nhl, p, hp.h, 2 * hp.dz, rng)
        decoder_out = sum(_param_width(f) for f in schema.features)
        model.decoder = network_maker(store, "decoder", hp.nhl, hp.dz, hp.h, decoder_out, rng)
    else:
        model.psi_mu = Tensor.parameter(np.zeros(p))
        model.psi_log_sigma = Tensor.parameter(np.zeros(p))
        store.add("psi.mu", model.psi_mu)
        store.add("psi.log_sigma", model.psi_log_sigma)

    if schema.n_missing_prone > 0:
        imputer_out = sum(_param_width(f) for f in schema.miss_features)
        model.imputer = network_maker(
            store, "imputer", hp.nhl, model.imputer_in_features(), hp.h, imputer_out, rng
        )

    model.head = GlmHead(store, p, schema.family, hp.nhl_y, hp.h, rng, name="glm")
    if schema.family.has_dispersion:
        model.log_alpha = Tensor.parameter(np.zeros(()))
        store.add("glm.log_alpha", model.log_alpha)

    if model.is_mnar and schema.n_missing_prone > 0:
        model.mask_net = network_maker(
            store, "mask", hp.nhl_r, model.mask_in_features(), hp.h_r, schema.n_missing_prone, rng
        )

    logger.debug(f"Built {model.method_name} ({hp.describe()}): {model.n_parameters()} parameters")
    return model
