"""
Forecast Model

Declarative strategy plans and the forecasts they produce.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from vitalcast.models.patient_model import VITALS

StrategyKind = Literal["direct", "iterative", "generative_boosting"]


class StrategyPlan(BaseModel):
    kind: StrategyKind
    generative_depth: int = Field(0, ge=0)
    horizons: List[int]
    target_vital: Literal[VITALS] = "heart_rate"  # type: ignore[valid-type]

    model_config = {"extra": "forbid"}

    @field_validator("horizons")
    @classmethod
    def _horizons(cls, value: List[int]) -> List[int]:
        if not value or any(h < 1 for h in value):
            raise ValueError("horizons must be a non-empty list of integers >= 1")
        return sorted(set(value))

    @model_validator(mode="after")
    def _depth_matches_kind(self):
        if self.kind in ("direct", "iterative") and self.generative_depth != 0:
            raise ValueError(f"{self.kind} forecasting has no generative depth (got {self.generative_depth})")
        if self.kind == "generative_boosting" and self.generative_depth < 1:
            raise ValueError("generative boosting needs generative_depth >= 1; use direct forecasting for depth 0")
        return self

    @property
    def reported_horizons(self) -> List[int]:
        """Horizons with predictive-model outputs (generated horizons are excluded)."""
        return [h for h in self.horizons if h > self.generative_depth]

    @property
    def generated_horizons(self) -> List[int]:
        return list(range(1, self.generative_depth + 1))


@dataclass(frozen=True)
class Forecast:
    """Forecast per horizon; `generated` marks horizons produced by the generative model."""

    values: Dict[int, float]
    generated: FrozenSet[int] = field(default_factory=frozenset)

    @property
    def horizons(self) -> List[int]:
        return sorted(self.values)

    @property
    def predicted(self) -> Dict[int, float]:
        return {h: v for h, v in self.values.items() if h not in self.generated}

    def __getitem__(self, horizon: int) -> float:
        return self.values[horizon]
