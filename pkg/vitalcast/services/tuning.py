"""
Validation-based Model Selection

Trains one LSTM per grid point (hidden size x learning rate), or one MLP per
(layer widths x learning rate), and keeps the one
with the lowest validation MSE (model units). Ties go to the earlier grid point.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from vitalcast.core.numerics import Rng
from vitalcast.forecasters.lstm import LstmForecaster, lstm_fit
from vitalcast.forecasters.mlp import MlpForecaster, mlp_fit
from vitalcast.models.experiment_model import MlpConfig, TrainConfig, TuningGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TunedLstm:
    forecaster: LstmForecaster
    config: TrainConfig
    val_mse: float
    losses: List[float]


def tune_lstm(
    train_x: np.ndarray,
    train_y: np.ndarray,
    val_x: np.ndarray,
    val_y: np.ndarray,
    base: TrainConfig,
    grid: TuningGrid,
    rng: Rng,
    tag: str = "LSTM",
) -> TunedLstm:
    """With no validation windows the final training loss decides."""
    val_y = np.asarray(val_y, dtype=np.float64)
    if val_y.ndim == 1:
        val_y = val_y[:, None]
    rates = grid.learning_rates or [base.learning_rate]
    best = None
    for hidden in grid.hidden_sizes:
        for rate in rates:
            config = base.model_copy(update={"hidden_size": hidden, "learning_rate": rate})
            fit = lstm_fit(train_x, train_y, config, rng.substream("grid", hidden, repr(rate)))
            model = LstmForecaster(fit.params)
            if val_x.shape[0]:
                score = float(np.mean((model.predict_batch(val_x) - val_y) ** 2))
            else:
                score = fit.losses[-1]
            if best is None or score < best.val_mse:
                best = TunedLstm(forecaster=model, config=config, val_mse=score, losses=fit.losses)
    if len(grid.hidden_sizes) * len(rates) > 1:
        logger.info(
            f"[{tag}] ✓ Selected hidden={best.config.hidden_size} lr={best.config.learning_rate:g} "
            f"(val mse {best.val_mse:.6f})"
        )
    return best


@dataclass(frozen=True)
class TunedMlp:
    forecaster: MlpForecaster
    config: MlpConfig
    val_mse: float


def tune_mlp(
    train_x: np.ndarray,
    train_y: np.ndarray,
    val_x: np.ndarray,
    val_y: np.ndarray,
    base: MlpConfig,
    grid: TuningGrid,
    rng: Rng,
    tag: str = "MLP",
) -> TunedMlp:
    """Same selection rule as tune_lstm over layer widths x learning rates."""
    val_y = np.asarray(val_y, dtype=np.float64)
    if val_y.ndim == 1:
        val_y = val_y[:, None]
    rates = grid.learning_rates or [base.learning_rate]
    layer_options = grid.mlp_hidden_layers or [base.hidden_layers]
    best = None
    for layers in layer_options:
        for rate in rates:
            config = base.model_copy(update={"hidden_layers": list(layers), "learning_rate": rate})
            fit = mlp_fit(train_x, train_y, config, rng.substream("grid", *layers, repr(rate)))
            model = MlpForecaster(fit.params)
            if val_x.shape[0]:
                score = float(np.mean((model.predict_batch(val_x) - val_y) ** 2))
            else:
                score = fit.losses[-1]
            if best is None or score < best.val_mse:
                best = TunedMlp(forecaster=model, config=config, val_mse=score)
    if len(layer_options) * len(rates) > 1:
        logger.info(
            f"[{tag}] ✓ Selected layers={best.config.hidden_layers} lr={best.config.learning_rate:g} "
            f"(val mse {best.val_mse:.6f})"
        )
    return best
