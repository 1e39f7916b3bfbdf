"""
Report Model

Per-method, per-horizon MSE/MAPE table with run-averaging metadata.
"""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

SUBSTITUTE_LABELS = {"krr": "SVR substitute"}


class MetricCell(BaseModel):
    method: str
    horizon: int = Field(..., ge=1)
    mse: Optional[float] = None
    mape: Optional[float] = None
    mse_std: Optional[float] = None
    mape_std: Optional[float] = None
    per_seed_mse: List[float] = Field(default_factory=list)
    per_seed_mape: List[float] = Field(default_factory=list)
    mape_excluded: int = 0
    generated: bool = False

    @field_validator("mse", "mape")
    @classmethod
    def _non_negative(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value < 0:
            raise ValueError("metrics must be non-negative")
        return value

    @property
    def blank(self) -> bool:
        return self.mse is None


class MetricsReport(BaseModel):
    target_vital: str
    horizons: List[int] = Field(default_factory=list)
    methods: List[str] = Field(default_factory=list)
    cells: List[MetricCell] = Field(default_factory=list)
    n_runs: int = 0
    seeds: List[int] = Field(default_factory=list)
    generated_horizons: Dict[str, List[int]] = Field(default_factory=dict)
    # method -> horizon -> {"mse": .., "mape": ..} for steps produced by the generator
    generative_diagnostics: Dict[str, Dict[int, Dict[str, float]]] = Field(default_factory=dict)
    substitutes: Dict[str, str] = Field(default_factory=lambda: dict(SUBSTITUTE_LABELS))

    def cell(self, method: str, horizon: int) -> MetricCell:
        for cell in self.cells:
            if cell.method == method and cell.horizon == horizon:
                return cell
        raise KeyError((method, horizon))

    def best_cells(self) -> Dict[Tuple[int, str], str]:
        """Method with the lowest value per (horizon, metric) column; ties go to the earlier method."""
        best: Dict[Tuple[int, str], str] = {}
        for horizon in self.horizons:
            for metric in ("mse", "mape"):
                winner, winner_value = None, None
                for method in self.methods:
                    try:
                        value = getattr(self.cell(method, horizon), metric)
                    except KeyError:
                        continue
                    if value is None:
                        continue
                    if winner_value is None or value < winner_value:
                        winner, winner_value = method, value
                if winner is not None:
                    best[(horizon, metric)] = winner
        return best

    def leading_blanks(self, method: str) -> int:
        count = 0
        for horizon in self.horizons:
            if not self.cell(method, horizon).blank:
                break
            count += 1
        return count
