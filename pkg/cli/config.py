"""
Experiment configuration loaded from JSON and overridden by command-line flags
"""

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from config import settings
from dataset import IngestSchema, SimConfig
from missingness import MechanismForm, MechanismKind
from models import CovariateModel, Hyperparams, MechanismAssumption, Method
from utils.errors import UnsupportedConfigurationError


class ExperimentConfig(BaseModel):
    """
    One experiment: a data source, an optional mask, a method and its grid.

    Exactly one of simulate, csv_path or data_dir names the data. grid, when
    given, replaces the preset.
    """

    schema_version: Literal["1"] = "1"

    simulate: Optional[SimConfig] = None
    csv_path: Optional[str] = None
    ingest: Optional[IngestSchema] = None
    data_dir: Optional[str] = None

    mechanism: Optional[MechanismKind] = None
    form: MechanismForm = MechanismForm.LINEAR
    target_missing_rate: float = Field(default=0.3, ge=0.0, lt=1.0)
    frac_features_missing: float = Field(default=0.5, gt=0.0, le=1.0)

    method: Method = Method.DLGLM
    hyperparams: Hyperparams = Field(default_factory=Hyperparams)
    grid_preset: Literal["single", "smoke", "full"] = "single"
    grid: list[Hyperparams] = Field(default_factory=list)
    k_train: Optional[int] = Field(default=None, ge=1)
    k_eval: Optional[int] = Field(default=None, ge=1)

    seed: int = settings.default_seed
    threads: int = Field(default=settings.threads, ge=1)
    output_dir: str = settings.output_dir
    literal_ppv: bool = False

    # replicate
    methods: list[Method] = Field(
        default_factory=lambda: [Method.DLGLM, Method.IDLGLM, Method.MEAN_BASELINE]
    )
    mechanisms: list[MechanismKind] = Field(
        default_factory=lambda: [MechanismKind.MCAR, MechanismKind.MAR, MechanismKind.MNAR]
    )
    seeds: list[int] = Field(default_factory=lambda: [1, 2, 3])

    @field_validator("mechanism", "mechanisms", mode="before")
    @classmethod
    def _lower_mechanism(cls, value: Any) -> Any:
        if isinstance(value, str):
            return value.lower()
        if isinstance(value, list):
            return [v.lower() if isinstance(v, str) else v for v in value]
        return value

    @model_validator(mode="after")
    def _check_source(self) -> "ExperimentConfig":
        sources = [self.simulate is not None, self.csv_path is not None, self.data_dir is not None]
        if sum(sources) != 1:
            raise ValueError("Exactly one of simulate, csv_path or data_dir must be given")
        if self.csv_path is not None and self.ingest is None:
            raise ValueError("csv_path needs an ingest schema")
        return self

    @model_validator(mode="after")
    def _check_method_support(self) -> "ExperimentConfig":
        methods = {self.method}
        if "methods" in self.model_fields_set:
            methods.update(self.methods)
        explicit = self.grid or ([self.hyperparams] if self.grid_preset == "single" else [])
        categorical = self.ingest is not None and bool(self.ingest.categorical)
        for method in methods:
            ignorable = method.assumption == MechanismAssumption.IGNORABLE
            if method.is_network and ignorable and any(hp.nhl_r > 0 for hp in explicit):
                raise UnsupportedConfigurationError(
                    f"{method.value} has no mask network; nhl_r must be 0"
                )
            known = method.covariate_model == CovariateModel.KNOWN_DIAGONAL_GAUSSIAN
            if known and self.csv_path is not None and categorical:
                raise UnsupportedConfigurationError(
                    f"{method.value} models covariates as diagonal Gaussians; "
                    "categorical columns are not supported"
                )
        return self

    def base_hyperparams(self) -> Hyperparams:
        """hyperparams with the K overrides and the experiment seed applied"""
        update: dict[str, object] = {"seed": self.seed}
        if self.k_train is not None:
            update["k_train"] = self.k_train
        if self.k_eval is not None:
            update["k_eval"] = self.k_eval
        return self.hyperparams.model_copy(update=update)
