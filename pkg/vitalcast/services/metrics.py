"""
Forecast Metrics

MSE and MAPE in original units. MAPE skips actuals with |a| < 1e-6 and reports
how many it skipped.
"""

from typing import Dict, List, Mapping, NamedTuple, Sequence, Tuple

import numpy as np

from vitalcast.core.errors import ContractViolation
from vitalcast.models.report_model import MetricCell, MetricsReport
from vitalcast.services.preprocessing import MinMaxScaler

MAPE_EPSILON = 1e-6


def _pair(predictions, actuals) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    a = np.asarray(actuals, dtype=np.float64).ravel()
    if p.size != a.size or p.size == 0:
        raise ContractViolation(f"need equal, non-zero lengths; got {p.size} predictions and {a.size} actuals")
    return p, a


def mse(predictions, actuals) -> float:
    p, a = _pair(predictions, actuals)
    return float(np.mean((p - a) ** 2))


def mape_with_exclusions(predictions, actuals) -> Tuple[float, int]:
    """(100 * mean |error| / |actual|, number of excluded near-zero actuals)."""
    p, a = _pair(predictions, actuals)
    keep = np.abs(a) >= MAPE_EPSILON
    excluded = int(a.size - keep.sum())
    if not keep.any():
        raise ContractViolation("every actual is below the MAPE threshold; MAPE is undefined")
    return float(100.0 * np.mean(np.abs(p[keep] - a[keep]) / np.abs(a[keep]))), excluded


def mape(predictions, actuals) -> float:
    return mape_with_exclusions(predictions, actuals)[0]


class MetricValue(NamedTuple):
    mse: float
    mape: float
    excluded: int = 0


def score(predictions, actuals) -> MetricValue:
    value, excluded = mape_with_exclusions(predictions, actuals)
    return MetricValue(mse(predictions, actuals), value, excluded)


def score_scaled(scaled_predictions, actuals_raw, scaler: MinMaxScaler, target_index: int) -> MetricValue:
    """Invert model-unit predictions of the target vital, then score against raw actuals."""
    return score(scaler.invert_feature(np.asarray(scaled_predictions).ravel(), target_index), actuals_raw)


class MethodOutcome(NamedTuple):
    """One method, one seed: scores at reported horizons and generator scores at generated ones."""

    metrics: Dict[int, MetricValue]
    generated: Dict[int, MetricValue] = {}


def build_report(
    target_vital: str,
    horizons: Sequence[int],
    seeds: Sequence[int],
    methods: Sequence[str],
    depths: Mapping[str, int],
    runs: Sequence[Mapping[str, MethodOutcome]],
) -> MetricsReport:
    """
    Average per-seed outcomes into one table (mean and population std per cell).

    Horizons 1..depth of a generative-boosting method stay blank; the generator's
    own scores there go to `generative_diagnostics`.
    """
    cells: List[MetricCell] = []
    generated_horizons: Dict[str, List[int]] = {}
    diagnostics: Dict[str, Dict[int, Dict[str, float]]] = {}
    for method in methods:
        depth = depths.get(method, 0)
        generated_horizons[method] = [h for h in horizons if h <= depth]
        for h in horizons:
            if h <= depth:
                cells.append(MetricCell(method=method, horizon=h, generated=True))
                continue
            values = [run[method].metrics[h] for run in runs]
            mses = [v.mse for v in values]
            mapes = [v.mape for v in values]
            cells.append(
                MetricCell(
                    method=method,
                    horizon=h,
                    mse=float(np.mean(mses)),
                    mape=float(np.mean(mapes)),
                    mse_std=float(np.std(mses)),
                    mape_std=float(np.std(mapes)),
                    per_seed_mse=mses,
                    per_seed_mape=mapes,
                    mape_excluded=sum(v.excluded for v in values),
                )
            )
        if depth:
            diagnostics[method] = {
                h: {
                    "mse": float(np.mean([run[method].generated[h].mse for run in runs])),
                    "mape": float(np.mean([run[method].generated[h].mape for run in runs])),
                }
                for h in range(1, depth + 1)
            }
    return MetricsReport(
        target_vital=target_vital,
        horizons=list(horizons),
        methods=list(methods),
        cells=cells,
        n_runs=len(runs),
        seeds=list(seeds),
        generated_horizons=generated_horizons,
        generative_diagnostics=diagnostics,
    )


class SeedComparison(NamedTuple):
    """How often `method` scored at most `baseline`'s test MSE at one horizon."""

    method: str
    baseline: str
    horizon: int
    wins: int
    runs: int

    def holds(self, required: int) -> bool:
        return self.wins >= required


def compare_per_seed(report: MetricsReport, method: str, baseline: str, horizon: int) -> SeedComparison:
    """
    Count seeds where `method`'s test MSE is no worse than `baseline`'s.

    Raises:
        ContractViolation: either cell is blank or the seed lists differ in length
    """
    ours, theirs = report.cell(method, horizon), report.cell(baseline, horizon)
    if ours.blank or theirs.blank:
        raise ContractViolation(f"t+{horizon} is not reported for both {method} and {baseline}")
    if len(ours.per_seed_mse) != len(theirs.per_seed_mse):
        raise ContractViolation(f"{method} and {baseline} ran a different number of seeds")
    wins = sum(a <= b for a, b in zip(ours.per_seed_mse, theirs.per_seed_mse))
    return SeedComparison(method, baseline, horizon, int(wins), len(ours.per_seed_mse))
