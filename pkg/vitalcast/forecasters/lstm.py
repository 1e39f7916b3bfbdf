"""
LSTM Forecaster

Single-layer LSTM with a linear readout of the final hidden state, trained by
backpropagation through time.

Cell (gate order i, f, g, o; z = Wx x_t + Wh h_{t-1} + b)::

    i = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)
    y   = Wy h_M + by

State starts at zero for every window.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from vitalcast.core.errors import ContractViolation
from vitalcast.core.numerics import Rng, uniform_init
from vitalcast.forecasters.base import Forecaster, as_batch
from vitalcast.forecasters.training import minibatch_adam, mse_output_grad
from vitalcast.models.experiment_model import TrainConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LstmParams:
    Wx: np.ndarray  # 4h x K
    Wh: np.ndarray  # 4h x h
    b: np.ndarray  # 4h
    Wy: np.ndarray  # out x h
    by: np.ndarray  # out

    def __post_init__(self):
        four_h, k = self.Wx.shape
        h = four_h // 4
        out = self.Wy.shape[0]
        expected = {"Wx": (4 * h, k), "Wh": (4 * h, h), "b": (4 * h,), "Wy": (out, h), "by": (out,)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape or four_h % 4:
                raise ContractViolation(f"LSTM {name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def input_size(self) -> int:
        return int(self.Wx.shape[1])

    @property
    def hidden_size(self) -> int:
        return int(self.Wh.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.Wy.shape[0])

    @property
    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.Wx, self.Wh, self.b, self.Wy, self.by)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays])

    @classmethod
    def from_vector(cls, theta: np.ndarray, input_size: int, hidden_size: int, output_dim: int) -> "LstmParams":
        shapes = _shapes(input_size, hidden_size, output_dim)
        sizes = [int(np.prod(s)) for s in shapes]
        if theta.size != sum(sizes):
            raise ContractViolation(f"parameter vector has {theta.size} entries, expected {sum(sizes)}")
        parts = np.split(np.asarray(theta, dtype=np.float64), np.cumsum(sizes)[:-1])
        return cls(*(p.reshape(s) for p, s in zip(parts, shapes)))

    @classmethod
    def init(
        cls, input_size: int, hidden_size: int, output_dim: int, rng: Optional[Rng] = None, scale: float = 0.08
    ) -> "LstmParams":
        """Uniform weights in [-scale, scale]; rng=None gives all zeros."""
        return cls(*(uniform_init(rng, s, scale) for s in _shapes(input_size, hidden_size, output_dim)))


def _shapes(k: int, h: int, out: int):
    return [(4 * h, k), (4 * h, h), (4 * h,), (out, h), (out,)]


@dataclass(frozen=True, eq=False)
class LstmCache:
    params: LstmParams
    inputs: np.ndarray  # B x M x K
    h: List[np.ndarray]  # h_0 .. h_M
    c: List[np.ndarray]  # c_0 .. c_M
    gates: List[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]  # (i, f, g, o) per step
    tanh_c: List[np.ndarray]


def lstm_forward(params: LstmParams, windows: np.ndarray) -> Tuple[np.ndarray, LstmCache]:
    """
    Run the recurrence over each window.

    Args:
        windows: M x K or B x M x K

    Returns:
        (outputs B x out, or out for a single window; cache for lstm_backward)
    """
    single = np.asarray(windows).ndim == 2
    x = as_batch(windows)
    batch, steps, k = x.shape
    if k != params.input_size:
        raise ContractViolation(f"window has {k} features, LSTM expects {params.input_size}")
    hs = params.hidden_size
    h = [np.zeros((batch, hs))]
    c = [np.zeros((batch, hs))]
    gates, tanh_c = [], []
    for t in range(steps):
        z = x[:, t, :] @ params.Wx.T + h[-1] @ params.Wh.T + params.b
        i = expit(z[:, :hs])
        f = expit(z[:, hs : 2 * hs])
        g = np.tanh(z[:, 2 * hs : 3 * hs])
        o = expit(z[:, 3 * hs :])
        c_t = f * c[-1] + i * g
        tc = np.tanh(c_t)
        c.append(c_t)
        h.append(o * tc)
        gates.append((i, f, g, o))
        tanh_c.append(tc)
    y = h[-1] @ params.Wy.T + params.by
    cache = LstmCache(params=params, inputs=x, h=h, c=c, gates=gates, tanh_c=tanh_c)
    return (y[0] if single else y), cache


def lstm_backward(params: LstmParams, cache: LstmCache, output_grad: np.ndarray) -> LstmParams:
    """Exact gradients of sum(output_grad * outputs) w.r.t. every parameter."""
    if cache.params is not params:
        raise ContractViolation("stale LSTM cache: it was produced with different parameters")
    batch = cache.inputs.shape[0]
    dy = np.asarray(output_grad, dtype=np.float64).reshape(batch, -1)
    if dy.shape[1] != params.output_dim:
        raise ContractViolation(f"output gradient has {dy.shape[1]} columns, LSTM outputs {params.output_dim}")

    dWx = np.zeros_like(params.Wx)
    dWh = np.zeros_like(params.Wh)
    db = np.zeros_like(params.b)
    dWy = dy.T @ cache.h[-1]
    dby = dy.sum(axis=0)

    dh = dy @ params.Wy
    dc = np.zeros_like(dh)
    for t in reversed(range(len(cache.gates))):
        i, f, g, o = cache.gates[t]
        tc = cache.tanh_c[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.hstack(
            [
                dc * g * i * (1.0 - i),
                dc * cache.c[t] * f * (1.0 - f),
                dc * i * (1.0 - g * g),
                do * o * (1.0 - o),
            ]
        )
        dWx += dz.T @ cache.inputs[:, t, :]
        dWh += dz.T @ cache.h[t]
        db += dz.sum(axis=0)
        dh = dz @ params.Wh
        dc = dc * f
    return LstmParams(Wx=dWx, Wh=dWh, b=db, Wy=dWy, by=dby)


@dataclass(frozen=True)
class LstmFit:
    params: LstmParams
    losses: List[float]


def lstm_fit(
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    rng: Rng,
    init: Optional[LstmParams] = None,
) -> LstmFit:
    """
    Mini-batch MSE training with Adam.

    Args:
        inputs: S x M x K windows
        targets: S x out (or S for a single output)
    """
    inputs = as_batch(inputs)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    k, out, hs = inputs.shape[2], targets.shape[1], config.hidden_size
    params = init or LstmParams.init(k, hs, out, rng.substream("init"), config.init_scale)

    def loss_and_grad(theta, xb, yb):
        current = LstmParams.from_vector(theta, k, hs, out)
        outputs, cache = lstm_forward(current, xb)
        loss, dy = mse_output_grad(outputs, yb)
        return loss, lstm_backward(current, cache, dy).to_vector()

    result = minibatch_adam(loss_and_grad, params.to_vector(), inputs, targets, config, rng, tag="LSTM")
    logger.info(
        f"[LSTM] ✓ Trained h={hs} out={out} on {inputs.shape[0]} windows: "
        f"mse {result.losses[0]:.5f} -> {result.losses[-1]:.5f}"
    )
    return LstmFit(params=LstmParams.from_vector(result.theta, k, hs, out), losses=result.losses)


class LstmForecaster(Forecaster):
    kind = "lstm"

    def __init__(self, params: LstmParams):
        self.params = params

    @property
    def output_dim(self) -> int:
        return self.params.output_dim

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        outputs, _ = lstm_forward(self.params, as_batch(windows))
        return outputs
