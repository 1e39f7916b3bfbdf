"""
Experiment Model

The JSON experiment document and the per-model training configurations.

Defaults mirror the published setup: windows of 20 steps, batches of 20, a
generator trained 300 epochs at lr 0.0005, predictors 100 epochs at lr 0.001,
ten MI groups and a 60/20/20 split with a 40/20 inner split of the training share.
"""

import json
import re
from pathlib import Path
from typing import List, Literal, NamedTuple, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from vitalcast.core.errors import ConfigError
from vitalcast.models.dataset_model import SplitPlan
from vitalcast.models.patient_model import VITALS
from vitalcast.models.synth_model import CohortSpec

BENCHMARK_METHODS = ("krr", "gpr", "arima", "mlp", "lstm-direct", "lstm-iterative")
_GLSTM_PATTERN = re.compile(r"^glstm-g([1-9][0-9]*)(-mi)?$")

ReportFormat = Literal["csv", "markdown", "json", "pdf"]


class MethodSpec(NamedTuple):
    name: str
    family: str  # one of BENCHMARK_METHODS or "glstm"
    depth: int = 0
    mi_selection: bool = False


def parse_method(name: str) -> MethodSpec:
    if name in BENCHMARK_METHODS:
        return MethodSpec(name=name, family=name)
    match = _GLSTM_PATTERN.match(name)
    if match:
        return MethodSpec(name=name, family="glstm", depth=int(match.group(1)), mi_selection=bool(match.group(2)))
    raise ValueError(
        f"unknown method {name!r}; expected one of {', '.join(BENCHMARK_METHODS)}, glstm-g<g> or glstm-g<g>-mi"
    )


class TrainConfig(BaseModel):
    """Mini-batch MSE training with Adam."""

    epochs: int = Field(100, ge=1)
    batch_size: int = Field(20, ge=1)
    learning_rate: float = Field(0.001, gt=0)
    hidden_size: int = Field(1, ge=1)
    init_scale: float = Field(0.08, gt=0)
    loss: Literal["mse"] = "mse"
    shuffle_seed: Optional[int] = Field(None, ge=0)

    model_config = {"extra": "forbid"}


class MlpConfig(TrainConfig):
    hidden_layers: List[int] = Field(default_factory=lambda: [10, 5, 3])

    @field_validator("hidden_layers")
    @classmethod
    def _positive_layers(cls, value: List[int]) -> List[int]:
        if not value or any(size < 1 for size in value):
            raise ValueError("hidden_layers must be a non-empty list of positive sizes")
        return value


class TuningGrid(BaseModel):
    """Validation-MSE model selection grid; None learning rates means 'use the config value'."""

    hidden_sizes: List[int] = Field(default_factory=lambda: [1])
    learning_rates: Optional[List[float]] = None
    # MLP layer widths to try; None keeps mlp.hidden_layers
    mlp_hidden_layers: Optional[List[List[int]]] = None

    model_config = {"extra": "forbid"}

    @field_validator("hidden_sizes")
    @classmethod
    def _sizes(cls, value: List[int]) -> List[int]:
        if not value or any(size < 1 for size in value):
            raise ValueError("hidden_sizes must be a non-empty list of positive sizes")
        return value

    @field_validator("learning_rates")
    @classmethod
    def _rates(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and (not value or any(rate <= 0 for rate in value)):
            raise ValueError("learning_rates must be a non-empty list of positive rates")
        return value

    @field_validator("mlp_hidden_layers")
    @classmethod
    def _layers(cls, value: Optional[List[List[int]]]) -> Optional[List[List[int]]]:
        if value is not None and (not value or any(not layers or min(layers) < 1 for layers in value)):
            raise ValueError("mlp_hidden_layers must be a non-empty list of non-empty positive layer lists")
        return value


class KernelConfig(BaseModel):
    max_train_points: int = Field(1000, ge=2)
    gpr_signal_scales: List[float] = Field(default_factory=lambda: [0.5, 1.0])
    gpr_noise_levels: List[float] = Field(default_factory=lambda: [1e-2, 1e-1])
    krr_alphas: List[float] = Field(default_factory=lambda: [1e-3, 1e-2, 1e-1, 1.0])
    # Length scales are these multiples of the median pairwise training distance.
    length_scale_factors: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])

    model_config = {"extra": "forbid"}


class ArimaConfig(BaseModel):
    history: int = Field(20, ge=20)

    model_config = {"extra": "forbid"}


class MiConfig(BaseModel):
    k: int = Field(3, ge=1)
    groups: int = Field(10, ge=1)
    jitter: float = Field(1e-10, ge=0)
    # Rows this close in time are not neighbours in the KSG search.
    theiler_window: int = Field(24, ge=0)

    model_config = {"extra": "forbid"}


class DataSource(BaseModel):
    path: Optional[str] = None
    synthetic: Optional[CohortSpec] = None

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("data needs exactly one of 'path' or 'synthetic'")
        return self


class OutputConfig(BaseModel):
    directory: str = "reports"
    basename: str = "report"
    formats: List[ReportFormat] = Field(default_factory=lambda: ["csv", "markdown", "json"])

    model_config = {"extra": "forbid"}


class ExperimentConfig(BaseModel):
    data: DataSource
    target_vital: Literal[VITALS]  # type: ignore[valid-type]
    horizons: List[int]
    seeds: List[int]
    methods: List[str]

    window_length: int = Field(20, ge=1)
    splits: SplitPlan = Field(default_factory=SplitPlan)
    hold_splits_fixed: bool = False
    generator: TrainConfig = Field(default_factory=lambda: TrainConfig(epochs=300, learning_rate=0.0005))
    predictor: TrainConfig = Field(default_factory=lambda: TrainConfig(epochs=100, learning_rate=0.001))
    mlp: MlpConfig = Field(default_factory=MlpConfig)
    tuning: TuningGrid = Field(default_factory=TuningGrid)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    arima: ArimaConfig = Field(default_factory=ArimaConfig)
    micluster: MiConfig = Field(default_factory=MiConfig)
    predictors_on_generated_windows: bool = True
    output: OutputConfig = Field(default_factory=OutputConfig)

    model_config = {"extra": "forbid"}

    @field_validator("horizons")
    @classmethod
    def _horizons(cls, value: List[int]) -> List[int]:
        if not value or any(h < 1 for h in value):
            raise ValueError("horizons must be a non-empty list of integers >= 1")
        return sorted(set(value))

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, value: List[int]) -> List[int]:
        if not value or any(seed < 0 for seed in value):
            raise ValueError("seeds must be a non-empty list of non-negative integers")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be unique")
        return value

    @field_validator("methods")
    @classmethod
    def _methods(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("methods must not be empty")
        for name in value:
            parse_method(name)
        if len(set(value)) != len(value):
            raise ValueError("methods must be unique")
        return value

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.arima.history > self.window_length and "arima" in self.methods:
            raise ValueError("arima.history cannot exceed window_length")
        for spec in self.method_specs:
            if spec.family == "glstm" and spec.depth >= max(self.horizons):
                raise ValueError(f"{spec.name}: generative depth must be below the largest horizon")
        return self

    @property
    def method_specs(self) -> List[MethodSpec]:
        return [parse_method(name) for name in self.methods]


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error["loc"]) or "<root>"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def parse_experiment_config(payload: Union[str, bytes, dict]) -> ExperimentConfig:
    try:
        if isinstance(payload, dict):
            return ExperimentConfig.model_validate(payload)
        return ExperimentConfig.model_validate(json.loads(payload))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_experiment_config(text)
