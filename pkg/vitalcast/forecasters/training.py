"""
Mini-batch Training Loop

Adam over a flat parameter vector with epoch-wise shuffling. Shared by the
LSTM and MLP trainers.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from vitalcast.core.errors import ContractViolation, NonFiniteError, TrainingDivergedError
from vitalcast.core.numerics import AdamState, Rng, adam_step
from vitalcast.models.experiment_model import TrainConfig

logger = logging.getLogger(__name__)

# (theta, inputs batch, targets batch) -> (mean squared error, gradient of it w.r.t. theta)
LossAndGrad = Callable[[np.ndarray, np.ndarray, np.ndarray], Tuple[float, np.ndarray]]


@dataclass(frozen=True)
class TrainResult:
    theta: np.ndarray
    losses: List[float]  # mean training MSE per epoch


def mse_output_grad(outputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Loss mean((y - t)^2) over every entry and its gradient w.r.t. y."""
    diff = outputs - targets
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def shuffle_stream(config: TrainConfig, rng: Rng) -> Rng:
    if config.shuffle_seed is not None:
        return Rng(config.shuffle_seed)
    return rng.substream("shuffle")


def minibatch_adam(
    loss_and_grad: LossAndGrad,
    theta: np.ndarray,
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    rng: Rng,
    tag: str = "TRAIN",
) -> TrainResult:
    """
    Raises:
        ContractViolation: empty dataset or mismatched sample counts
        TrainingDivergedError: non-finite loss or gradient, with epoch and batch
    """
    n = inputs.shape[0]
    if n == 0:
        raise ContractViolation("cannot train on an empty dataset")
    if targets.shape[0] != n:
        raise ContractViolation(f"{n} inputs but {targets.shape[0]} targets")

    order_rng = shuffle_stream(config, rng)
    state = AdamState.zeros(theta.size)
    losses: List[float] = []
    for epoch in range(config.epochs):
        order = order_rng.permutation(n)
        total = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            loss, grad = loss_and_grad(theta, inputs[idx], targets[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, batch, loss)
            try:
                theta, state = adam_step(theta, grad, state, config.learning_rate)
            except NonFiniteError:
                raise TrainingDivergedError(epoch, batch, loss) from None
            total += loss * idx.size
        losses.append(total / n)
        if epoch == 0 or (epoch + 1) % 50 == 0 or epoch + 1 == config.epochs:
            logger.debug(f"[{tag}] epoch {epoch + 1}/{config.epochs} mse={losses[-1]:.6f}")
    return TrainResult(theta=theta, losses=losses)
