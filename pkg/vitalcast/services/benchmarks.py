"""
Benchmark Methods

Trained on the full training share T and scored on the same test windows as
GLSTM:

- krr / gpr: kernel models on flattened windows, grid-searched on validation
- arima: ARIMA(2,0,1) refit on each test window's last `history` target values
- mlp: sigmoid network on flattened windows, one per horizon; layer widths
  (default [10, 5, 3]) and learning rate picked on validation
- lstm-direct: one LSTM per horizon
- lstm-iterative: one next-step 5-vital LSTM fed back on itself
"""

import logging
from typing import Dict

import numpy as np

from vitalcast.core.errors import ContractViolation
from vitalcast.core.numerics import Rng
from vitalcast.forecasters.arima import arima_fit, arima_forecast_path
from vitalcast.forecasters.kernels import select_kernel_models
from vitalcast.models.experiment_model import ExperimentConfig
from vitalcast.services.experiment_data import SeedData
from vitalcast.services.metrics import MethodOutcome, MetricValue, score_scaled
from vitalcast.services.strategies import direct_predict_batch, iterative_predict_batch
from vitalcast.services.tuning import tune_lstm, tune_mlp

logger = logging.getLogger(__name__)


def _targets(dataset, horizons) -> np.ndarray:
    return np.column_stack([dataset.target(h) for h in horizons])


def _kernel(kind: str, data: SeedData, config: ExperimentConfig, rng: Rng) -> Dict[int, np.ndarray]:
    horizons = list(data.horizons)
    models = select_kernel_models(
        kind,
        data.train.flattened(),
        _targets(data.train, horizons),
        data.validation.flattened(),
        _targets(data.validation, horizons),
        horizons,
        config.kernel,
        rng,
    )
    return direct_predict_batch(models, data.test.windows, horizons)


def _arima(data: SeedData, config: ExperimentConfig, rng: Rng) -> Dict[int, np.ndarray]:
    horizons = list(data.horizons)
    history = config.arima.history
    series = data.test.windows[:, -history:, data.target_index]
    paths = np.empty((series.shape[0], max(horizons)))
    projected = 0
    for s, values in enumerate(series):
        coeffs = arima_fit(values)
        projected += int(coeffs.projected)
        paths[s] = arima_forecast_path(coeffs, values, max(horizons))
    if projected:
        logger.warning(f"[ARIMA] ⚠️ {projected}/{series.shape[0]} window fits projected to the stationary region")
    return {h: paths[:, h - 1] for h in horizons}


def _mlp(data: SeedData, config: ExperimentConfig, rng: Rng) -> Dict[int, np.ndarray]:
    out = {}
    for h in data.horizons:
        tuned = tune_mlp(
            data.train.flattened(),
            data.train.target(h),
            data.validation.windows,
            data.validation.target(h),
            config.mlp,
            config.tuning,
            rng.substream("horizon", h),
        )
        out[h] = tuned.forecaster.predict_batch(data.test.windows)[:, 0]
    return out


def _lstm_direct(data: SeedData, config: ExperimentConfig, rng: Rng) -> Dict[int, np.ndarray]:
    models = {}
    for h in data.horizons:
        tuned = tune_lstm(
            data.train.windows,
            data.train.target(h),
            data.validation.windows,
            data.validation.target(h),
            config.predictor,
            config.tuning,
            rng.substream("horizon", h),
            tag="LSTM-DIRECT",
        )
        models[h] = tuned.forecaster
    return direct_predict_batch(models, data.test.windows, list(data.horizons))


def _lstm_iterative(data: SeedData, config: ExperimentConfig, rng: Rng) -> Dict[int, np.ndarray]:
    tuned = tune_lstm(
        data.train.windows,
        data.train.next_step(),
        data.validation.windows,
        data.validation.next_step(),
        config.generator,
        config.tuning,
        rng,
        tag="LSTM-ITERATIVE",
    )
    paths = iterative_predict_batch(tuned.forecaster, data.test.windows, max(data.horizons), data.target_index)
    return {h: paths[h] for h in data.horizons}


_RUNNERS = {
    "krr": lambda data, config, rng: _kernel("krr", data, config, rng),
    "gpr": lambda data, config, rng: _kernel("gpr", data, config, rng),
    "arima": _arima,
    "mlp": _mlp,
    "lstm-direct": _lstm_direct,
    "lstm-iterative": _lstm_iterative,
}


def run_benchmark(name: str, data: SeedData, config: ExperimentConfig, rng: Rng) -> MethodOutcome:
    try:
        runner = _RUNNERS[name]
    except KeyError:
        raise ContractViolation(f"unknown benchmark {name!r}") from None
    predictions = runner(data, config, rng)
    metrics: Dict[int, MetricValue] = {
        h: score_scaled(predictions[h], data.test.target_raw(h), data.scaler, data.target_index)
        for h in data.horizons
    }
    logger.info(f"[SUITE] ✓ {name} seed={data.seed}: " + ", ".join(f"h{h} mse={m.mse:.3f}" for h, m in metrics.items()))
    return MethodOutcome(metrics=metrics)
