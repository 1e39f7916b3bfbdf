"""
Forecasting Strategies

Direct, iterative and generative-boosting forecasting, plus the window surgery
they share: drop the oldest step, append a generated vital vector and carry the
static columns of the latest row forward, keeping the window at M x K.

The batched functions work on B x M x K arrays in model (scaled) units; the
single-window functions return a Forecast, inverse-scaled when a scaler is given.
"""

import logging
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from vitalcast.core.errors import ContractViolation
from vitalcast.forecasters.base import Forecaster, as_batch
from vitalcast.models.dataset_model import WindowedDataset
from vitalcast.models.forecast_model import Forecast
from vitalcast.models.patient_model import N_VITALS
from vitalcast.services.preprocessing import MinMaxScaler

logger = logging.getLogger(__name__)


def append_step(windows: np.ndarray, step: np.ndarray) -> np.ndarray:
    """B x M x K windows shifted by one step; `step` holds B x 5 vitals."""
    windows = as_batch(windows)
    step = np.asarray(step, dtype=np.float64).reshape(windows.shape[0], -1)
    if step.shape[1] < N_VITALS:
        raise ContractViolation(f"a generated step needs {N_VITALS} vitals, got {step.shape[1]}")
    new_row = np.concatenate([step[:, :N_VITALS], windows[:, -1, N_VITALS:]], axis=1)
    return np.concatenate([windows[:, 1:, :], new_row[:, None, :]], axis=1)


def augment_windows(generator: Forecaster, windows: np.ndarray, depth: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Apply `depth` generation steps.

    Returns:
        (augmented B x M x K windows, generated B x depth x 5 vitals)
    """
    if depth < 0:
        raise ContractViolation(f"generation depth must be >= 0, got {depth}")
    current = as_batch(windows)
    generated = np.empty((current.shape[0], depth, N_VITALS))
    for step in range(depth):
        out = generator.predict_batch(current)
        if out.shape[1] < N_VITALS:
            raise ContractViolation(f"generator outputs {out.shape[1]} values, needs {N_VITALS}")
        generated[:, step] = out[:, :N_VITALS]
        current = append_step(current, out)
    return current, generated


def clean_augment(dataset: WindowedDataset, depth: int) -> np.ndarray:
    """Windows shifted with the true future steps instead of generated ones."""
    if depth > dataset.h_max:
        raise ContractViolation(f"depth {depth} exceeds the stored future ({dataset.h_max} steps)")
    current = dataset.windows
    for step in range(depth):
        current = append_step(current, dataset.future[:, step])
    return current


def direct_predict_batch(models: Mapping[int, Forecaster], windows: np.ndarray, horizons: Sequence[int]) -> Dict[int, np.ndarray]:
    missing = [h for h in horizons if h not in models]
    if missing:
        raise ContractViolation(f"no trained model for horizon(s) {missing}")
    batch = as_batch(windows)
    return {h: models[h].predict_batch(batch)[:, 0] for h in horizons}


def iterative_predict_batch(model: Forecaster, windows: np.ndarray, steps: int, target_index: int) -> Dict[int, np.ndarray]:
    if steps < 1:
        raise ContractViolation(f"iterative forecasting needs N >= 1, got {steps}")
    _, generated = augment_windows(model, windows, steps)
    return {h: generated[:, h - 1, target_index] for h in range(1, steps + 1)}


def generative_predict_batch(
    generator: Forecaster,
    pred_models: Mapping[int, Forecaster],
    windows: np.ndarray,
    depth: int,
    horizons: Sequence[int],
    target_index: int,
) -> Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]]:
    """Returns (predicted values for h > depth, generated target values for h = 1..depth)."""
    if depth < 1:
        raise ContractViolation("generative boosting needs depth >= 1; use direct_forecast for depth 0")
    augmented, generated = augment_windows(generator, windows, depth)
    reported = [h for h in horizons if h > depth]
    predicted = direct_predict_batch(pred_models, augmented, reported)
    return predicted, {h: generated[:, h - 1, target_index] for h in range(1, depth + 1)}


def _to_units(value: float, scaler: Optional[MinMaxScaler], target_index: int) -> float:
    if scaler is None:
        return float(value)
    return float(scaler.invert_feature(np.asarray(value), target_index))


def _single(window: np.ndarray) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ContractViolation(f"expected one M x K window, got shape {window.shape}")
    return window[None]


def direct_forecast(
    models: Mapping[int, Forecaster],
    window: np.ndarray,
    horizons: Optional[Sequence[int]] = None,
    target_index: int = 0,
    scaler: Optional[MinMaxScaler] = None,
) -> Forecast:
    horizons = sorted(models) if horizons is None else sorted(horizons)
    values = direct_predict_batch(models, _single(window), horizons)
    return Forecast({h: _to_units(v[0], scaler, target_index) for h, v in values.items()})


def iterative_forecast(
    model: Forecaster,
    window: np.ndarray,
    steps: int,
    target_index: int = 0,
    scaler: Optional[MinMaxScaler] = None,
) -> Forecast:
    values = iterative_predict_batch(model, _single(window), steps, target_index)
    return Forecast({h: _to_units(v[0], scaler, target_index) for h, v in values.items()})


def generative_boost(
    generator: Forecaster,
    pred_models: Mapping[int, Forecaster],
    window: np.ndarray,
    depth: int,
    horizons: Sequence[int],
    target_index: int = 0,
    scaler: Optional[MinMaxScaler] = None,
) -> Forecast:
    """Horizons 1..depth come from the generator and are flagged as generated."""
    predicted, generated = generative_predict_batch(generator, pred_models, _single(window), depth, horizons, target_index)
    values = {h: _to_units(v[0], scaler, target_index) for h, v in generated.items()}
    values.update({h: _to_units(v[0], scaler, target_index) for h, v in predicted.items()})
    return Forecast(values, generated=frozenset(generated))
