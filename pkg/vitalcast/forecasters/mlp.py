"""
MLP Forecaster

Feed-forward network on flattened windows (M*K inputs): sigmoid hidden layers,
linear output layer.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from vitalcast.core.errors import ContractViolation
from vitalcast.core.numerics import Rng, uniform_init
from vitalcast.forecasters.base import Forecaster, as_batch
from vitalcast.forecasters.training import minibatch_adam, mse_output_grad
from vitalcast.models.experiment_model import MlpConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MlpParams:
    weights: Tuple[np.ndarray, ...]  # layer l: out_l x in_l
    biases: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ContractViolation("MLP needs one bias per weight matrix")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ContractViolation(f"MLP layer {l}: weight {w.shape} / bias {b.shape} mismatch")
            if l and w.shape[1] != self.weights[l - 1].shape[0]:
                raise ContractViolation(f"MLP layer {l} expects {w.shape[1]} inputs, previous layer gives "
                                        f"{self.weights[l - 1].shape[0]}")

    @property
    def sizes(self) -> List[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def input_size(self) -> int:
        return int(self.weights[0].shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.weights[-1].shape[0])

    @property
    def arrays(self) -> Tuple[np.ndarray, ...]:
        return tuple(a for pair in zip(self.weights, self.biases) for a in pair)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays])

    @classmethod
    def from_vector(cls, theta: np.ndarray, sizes: Sequence[int]) -> "MlpParams":
        weights, biases, offset = [], [], 0
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(theta[offset : offset + fan_in * fan_out].reshape(fan_out, fan_in))
            offset += fan_in * fan_out
            biases.append(theta[offset : offset + fan_out])
            offset += fan_out
        if offset != theta.size:
            raise ContractViolation(f"parameter vector has {theta.size} entries, expected {offset}")
        return cls(tuple(weights), tuple(biases))

    @classmethod
    def init(cls, sizes: Sequence[int], rng: Optional[Rng] = None, scale: float = 0.08) -> "MlpParams":
        weights = tuple(uniform_init(rng, (o, i), scale) for i, o in zip(sizes[:-1], sizes[1:]))
        biases = tuple(uniform_init(rng, (o,), scale) for o in sizes[1:])
        return cls(weights, biases)


def _flatten(inputs: np.ndarray) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.float64)
    return inputs.reshape(inputs.shape[0], -1) if inputs.ndim == 3 else inputs


def mlp_forward(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """B x D (or B x M x K, flattened) -> (B x out, activations per layer input)."""
    a = _flatten(inputs)
    if a.shape[1] != params.input_size:
        raise ContractViolation(f"MLP expects {params.input_size} inputs, got {a.shape[1]}")
    activations = [a]
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        a = z if l == last else expit(z)
        activations.append(a)
    return a, activations


def mlp_backward(params: MlpParams, activations: List[np.ndarray], output_grad: np.ndarray) -> MlpParams:
    delta = np.asarray(output_grad, dtype=np.float64)
    dW: List[np.ndarray] = [None] * len(params.weights)  # type: ignore[list-item]
    dB: List[np.ndarray] = [None] * len(params.weights)  # type: ignore[list-item]
    for l in reversed(range(len(params.weights))):
        dW[l] = delta.T @ activations[l]
        dB[l] = delta.sum(axis=0)
        if l:
            a = activations[l]
            delta = (delta @ params.weights[l]) * a * (1.0 - a)
    return MlpParams(tuple(dW), tuple(dB))


@dataclass(frozen=True)
class MlpFit:
    params: MlpParams
    losses: List[float]


def mlp_fit(inputs: np.ndarray, targets: np.ndarray, config: MlpConfig, rng: Rng) -> MlpFit:
    x = _flatten(inputs)
    y = np.asarray(targets, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    sizes = [x.shape[1], *config.hidden_layers, y.shape[1]]
    params = MlpParams.init(sizes, rng.substream("init"), config.init_scale)

    def loss_and_grad(theta, xb, yb):
        current = MlpParams.from_vector(theta, sizes)
        outputs, activations = mlp_forward(current, xb)
        loss, dy = mse_output_grad(outputs, yb)
        return loss, mlp_backward(current, activations, dy).to_vector()

    result = minibatch_adam(loss_and_grad, params.to_vector(), x, y, config, rng, tag="MLP")
    logger.info(f"[MLP] ✓ Trained {sizes} on {x.shape[0]} windows: mse {result.losses[0]:.5f} -> {result.losses[-1]:.5f}")
    return MlpFit(params=MlpParams.from_vector(result.theta, sizes), losses=result.losses)


class MlpForecaster(Forecaster):
    kind = "mlp"

    def __init__(self, params: MlpParams):
        self.params = params

    @property
    def output_dim(self) -> int:
        return self.params.output_dim

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        outputs, _ = mlp_forward(self.params, as_batch(windows))
        return outputs
