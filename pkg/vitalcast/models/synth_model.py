"""
Synthetic Cohort Model

Declarative description of a synthetic cohort (stand-in for a private hospital dataset).
"""

from pydantic import BaseModel, Field, model_validator


class CohortSpec(BaseModel):
    n_patients: int = Field(..., ge=1)
    steps_per_patient: int = Field(288, ge=1)  # 24 h at 5-minute cadence
    n_archetypes: int = Field(3, ge=1)
    missing_rate: float = Field(0.0, ge=0.0, lt=0.1)
    seed: int = Field(0, ge=0)
    # Windowing the cohort must leave at least one window per patient.
    window_length: int = Field(20, ge=1)
    max_horizon: int = Field(12, ge=1)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _check_sizes(self):
        if self.n_archetypes > self.n_patients:
            raise ValueError(
                f"n_archetypes ({self.n_archetypes}) cannot exceed n_patients ({self.n_patients})"
            )
        if self.steps_per_patient <= self.window_length + self.max_horizon:
            raise ValueError(
                f"steps_per_patient must exceed window_length + max_horizon "
                f"({self.window_length} + {self.max_horizon})"
            )
        return self
