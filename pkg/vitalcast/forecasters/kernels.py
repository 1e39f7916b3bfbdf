"""
Kernel Forecasters

Gaussian process regression (posterior mean) and kernel ridge regression on
flattened windows, both with the RBF kernel::

    k(x, x') = s2 * exp(-||x - x'||^2 / (2 l^2))

Both solve (K + lam I) alpha = y - mean(y) through a Cholesky factorisation;
GPR treats lam as observation noise, KRR as the ridge penalty (with s2 = 1).
KRR is the documented stand-in for an RBF support vector regressor.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import cdist, pdist

from vitalcast.core.errors import ContractViolation, GramMatrixError
from vitalcast.core.numerics import Rng
from vitalcast.forecasters.base import Forecaster, as_batch
from vitalcast.models.experiment_model import KernelConfig

logger = logging.getLogger(__name__)

MAX_JITTER_RETRIES = 3
MEDIAN_SAMPLE = 500


def rbf_kernel(a: np.ndarray, b: np.ndarray, length_scale: float, signal_var: float = 1.0) -> np.ndarray:
    if length_scale <= 0 or signal_var <= 0:
        raise ContractViolation("RBF length scale and signal variance must be positive")
    return signal_var * np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * length_scale**2))


def factorize_gram(gram: np.ndarray, reg: float):
    """Cholesky of gram + reg*I, escalating reg x10 up to three times. Returns (factor, reg used)."""
    if reg <= 0:
        raise ContractViolation(f"regularisation must be positive, got {reg}")
    eye = np.eye(gram.shape[0])
    current = reg
    for attempt in range(MAX_JITTER_RETRIES + 1):
        try:
            return cho_factor(gram + current * eye, lower=True), current
        except LinAlgError:
            logger.warning(f"[KERNEL] ⚠️ Gram matrix not positive definite at lambda={current:g} (attempt {attempt + 1})")
            current *= 10.0
    raise GramMatrixError(f"Gram matrix not positive definite after {MAX_JITTER_RETRIES} retries (lambda up to {current / 10:g})")


@dataclass(frozen=True, eq=False)
class KernelPosterior:
    """Training inputs plus solved weights; `alpha` and `y_mean` have one column per target."""

    x_train: np.ndarray
    alpha: np.ndarray  # n x T
    y_mean: np.ndarray  # T
    length_scale: float
    signal_var: float
    reg: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.y_mean + rbf_kernel(x, self.x_train, self.length_scale, self.signal_var) @ self.alpha


def _as_columns(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return y[:, None] if y.ndim == 1 else y


def _solve(x, y, length_scale, signal_var, reg) -> KernelPosterior:
    x = np.asarray(x, dtype=np.float64)
    y = _as_columns(y)
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ContractViolation(f"need matching, non-empty inputs and targets, got {x.shape[0]} and {y.shape[0]}")
    mean = y.mean(axis=0)
    factor, used = factorize_gram(rbf_kernel(x, x, length_scale, signal_var), reg)
    alpha = cho_solve(factor, y - mean)
    return KernelPosterior(x, alpha, mean, length_scale, signal_var, used)


def gpr_fit(x: np.ndarray, y: np.ndarray, length_scale: float, signal_var: float, noise: float) -> KernelPosterior:
    return _solve(x, y, length_scale, signal_var, noise)


def gpr_predict(posterior: KernelPosterior, x: np.ndarray) -> np.ndarray:
    """Posterior mean; 1-D output for a single-target fit."""
    out = posterior.predict(x)
    return out[:, 0] if out.shape[1] == 1 else out


def krr_fit(x: np.ndarray, y: np.ndarray, length_scale: float, alpha: float) -> KernelPosterior:
    return _solve(x, y, length_scale, 1.0, alpha)


def krr_predict(posterior: KernelPosterior, x: np.ndarray) -> np.ndarray:
    return gpr_predict(posterior, x)


class KernelForecaster(Forecaster):
    """Single-horizon view of a (possibly multi-target) posterior."""

    def __init__(self, posterior: KernelPosterior, column: int = 0, kind: str = "gpr"):
        self.posterior = posterior
        self.column = column
        self.kind = kind

    @property
    def output_dim(self) -> int:
        return 1

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        batch = as_batch(windows)
        flat = batch.reshape(batch.shape[0], -1)
        if flat.shape[1] != self.posterior.x_train.shape[1]:
            raise ContractViolation(f"kernel model expects {self.posterior.x_train.shape[1]} inputs, got {flat.shape[1]}")
        return self.posterior.predict(flat)[:, [self.column]]


def median_distance(x: np.ndarray, rng: Rng) -> float:
    sample = x if x.shape[0] <= MEDIAN_SAMPLE else x[np.sort(rng.choice(list(range(x.shape[0])), MEDIAN_SAMPLE))]
    distances = pdist(sample)
    positive = distances[distances > 0]
    return float(np.median(positive)) if positive.size else 1.0


def _grid(kind: str, config: KernelConfig) -> List[Tuple[float, float, float]]:
    """(length factor, signal variance, regularisation) combinations."""
    if kind == "gpr":
        return [
            (f, s, lam)
            for f in config.length_scale_factors
            for s in config.gpr_signal_scales
            for lam in config.gpr_noise_levels
        ]
    if kind == "krr":
        return [(f, 1.0, lam) for f in config.length_scale_factors for lam in config.krr_alphas]
    raise ContractViolation(f"unknown kernel model {kind!r}")


def select_kernel_models(
    kind: str,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    horizons: Sequence[int],
    config: KernelConfig,
    rng: Rng,
) -> Dict[int, KernelForecaster]:
    """
    Grid search on validation MSE, one winner per horizon.

    All horizons share the inputs, so each grid point needs a single factorisation.
    Training rows beyond `max_train_points` are subsampled with rng. With no
    validation windows every horizon takes the first grid point.

    Args:
        x_train, x_val: flattened windows
        y_train, y_val: one column per horizon, in `horizons` order
    """
    y_train = _as_columns(y_train)
    y_val = _as_columns(y_val)
    if y_train.shape[1] != len(horizons) or (y_val.size and y_val.shape[1] != len(horizons)):
        raise ContractViolation("target columns must match the horizon list")
    if x_train.shape[0] > config.max_train_points:
        keep = np.sort(rng.substream("subsample").choice(list(range(x_train.shape[0])), config.max_train_points))
        x_train, y_train = x_train[keep], y_train[keep]

    base = median_distance(x_train, rng.substream("median"))
    grid = _grid(kind, config)
    if np.asarray(x_val).shape[0] == 0:
        factor, signal_var, reg = grid[0]
        logger.warning(
            f"[KERNEL] ⚠️ {kind.upper()}: no validation windows, using l={factor * base:.4g} s2={signal_var:g} lambda={reg:g}"
        )
        posterior = _solve(x_train, y_train, factor * base, signal_var, reg)
        return {h: KernelForecaster(posterior, j, kind) for j, h in enumerate(horizons)}

    best_mse = np.full(len(horizons), np.inf)
    best: List[Optional[KernelPosterior]] = [None] * len(horizons)
    best_params: List[Optional[Tuple[float, float, float]]] = [None] * len(horizons)
    for factor, signal_var, reg in grid:
        posterior = _solve(x_train, y_train, factor * base, signal_var, reg)
        mse = np.mean((posterior.predict(x_val) - y_val) ** 2, axis=0)
        improved = mse < best_mse
        for j in np.flatnonzero(improved):
            best_mse[j] = mse[j]
            best[j] = posterior
            best_params[j] = (factor * base, signal_var, reg)

    if any(p is None for p in best):
        raise GramMatrixError(f"{kind}: no grid point produced a finite validation error")
    for h, params, score in zip(horizons, best_params, best_mse):
        logger.debug(f"[KERNEL] {kind} h={h}: l={params[0]:.4g} s2={params[1]:g} lambda={params[2]:g} val_mse={score:.6f}")
    logger.info(f"[KERNEL] ✓ {kind.upper()} selected over {len(grid)} grid points on {x_train.shape[0]} windows")
    return {h: KernelForecaster(posterior, j, kind) for j, (h, posterior) in enumerate(zip(horizons, best))}
