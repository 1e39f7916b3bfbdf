"""
Numerical Substrate

Seeded random streams, the Adam optimizer and a central-difference gradient
checker. Dense matrices and vectors are plain float64 numpy arrays.

Random generator
----------------
`Rng` wraps numpy's PCG64 bit generator (128-bit LCG with an XSL-RR output
permutation) seeded through `numpy.random.SeedSequence`. Streams are
bit-reproducible across platforms for a given (seed, call sequence). Reference
outputs for seed 0::

    Rng(0).uniform(3) -> [0.63696169, 0.26978671, 0.04097352]

Normal variates come from numpy's ziggurat transform of the uniform bit stream.
Nothing in vitalcast reads OS entropy.
"""

import logging
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np

from vitalcast.core.errors import ContractViolation, NonFiniteError

logger = logging.getLogger(__name__)

T = TypeVar("T")

_UINT64_MAX = 2**64 - 1


def _key_to_int(key: Union[int, str]) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if isinstance(key, (int, np.integer)) and key >= 0:
        return int(key)
    raise ContractViolation(f"substream keys must be non-negative ints or strings, got {key!r}")


class Rng:
    """Single-owner seeded random stream. Never share one across workers; use substream()."""

    def __init__(self, seed: Union[int, np.random.SeedSequence] = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            if not 0 <= int(seed) <= _UINT64_MAX:
                raise ContractViolation(f"seed must be a 64-bit unsigned integer, got {seed}")
            self._seq = np.random.SeedSequence(int(seed))
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def seed(self) -> int:
        return int(self._seq.entropy)

    @property
    def identity(self) -> tuple:
        """(seed, key path) naming this stream; equal identities give equal draws."""
        return (int(self._seq.entropy),) + tuple(int(k) for k in self._seq.spawn_key)

    def uniform(self, n: int) -> np.ndarray:
        if n < 0:
            raise ContractViolation(f"n must be >= 0, got {n}")
        return self._gen.random(n)

    def normal(self, n: int) -> np.ndarray:
        if n < 0:
            raise ContractViolation(f"n must be >= 0, got {n}")
        return self._gen.standard_normal(n)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def shuffle(self, items: Sequence[T]) -> List[T]:
        order = self._gen.permutation(len(items))
        return [items[i] for i in order]

    def choice(self, items: Sequence[T], k: int) -> List[T]:
        """Sample k items uniformly without replacement, preserving draw order."""
        if not 0 <= k <= len(items):
            raise ContractViolation(f"cannot draw {k} of {len(items)} items")
        picked = self._gen.choice(len(items), size=k, replace=False)
        return [items[i] for i in picked]

    def uniform_range(self, low: float, high: float, shape) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def spawn(self, n: int) -> List["Rng"]:
        return [Rng(child) for child in self._seq.spawn(n)]

    def substream(self, *keys: Union[int, str]) -> "Rng":
        """Child stream addressed by a key path; independent of how many draws were made."""
        path = tuple(self._seq.spawn_key) + tuple(_key_to_int(k) for k in keys)
        return Rng(np.random.SeedSequence(self._seq.entropy, spawn_key=path))


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, **hyper) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), **hyper)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, lr: float):
    """
    One bias-corrected Adam update.

    Coordinates whose gradient is exactly zero keep their value for this step
    (their moments still decay), so a zero gradient is a fixed point for any state.

    Returns:
        (new_params, new_state); inputs are not modified.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape or state.m.shape != state.v.shape:
        raise ContractViolation(
            f"Adam dimension mismatch: params {params.shape}, grads {grads.shape}, "
            f"m {state.m.shape}, v {state.v.shape}"
        )
    if lr <= 0:
        raise ContractViolation(f"learning rate must be positive, got {lr}")
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise NonFiniteError(
            f"non-finite gradient at index {int(bad[0])}: {grads[bad[0]]!r}", index=int(bad[0])
        )

    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * (grads * grads)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_params = np.where(grads == 0.0, params, params - update)
    return new_params, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class GradCheckReport:
    numeric: np.ndarray
    analytic: np.ndarray
    relative_errors: np.ndarray
    tol: float
    failing: List[int] = field(default_factory=list)

    @property
    def max_relative_error(self) -> float:
        return float(self.relative_errors.max()) if self.relative_errors.size else 0.0

    @property
    def passed(self) -> bool:
        return not self.failing


def grad_check(
    loss_fn: Callable[[np.ndarray], float],
    params: np.ndarray,
    analytic: np.ndarray,
    h: float = 1e-5,
    tol: float = 1e-4,
    abs_floor: float = 1e-8,
) -> GradCheckReport:
    """
    Compare an analytic gradient against central differences.

    Relative error per coordinate is |a - n| / max(|a|, |n|, abs_floor).
    """
    if h <= 0:
        raise ContractViolation(f"step h must be positive, got {h}")
    x = np.array(params, dtype=np.float64, copy=True)
    analytic = np.asarray(analytic, dtype=np.float64)
    if analytic.shape != x.shape:
        raise ContractViolation(f"analytic gradient shape {analytic.shape} != params shape {x.shape}")

    flat = x.reshape(-1)
    numeric = np.empty_like(flat)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        up = float(loss_fn(x))
        flat[i] = original - h
        down = float(loss_fn(x))
        flat[i] = original
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NonFiniteError(
                f"loss is non-finite at coordinate {i} evaluated at {original!r} +/- {h}", index=i
            )
        numeric[i] = (up - down) / (2.0 * h)

    numeric = numeric.reshape(x.shape)
    a = analytic.reshape(-1)
    n = numeric.reshape(-1)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), abs_floor)
    rel = np.abs(a - n) / denom
    failing = [int(i) for i in np.flatnonzero(rel > tol)]
    if failing:
        logger.debug(f"[GRADCHECK] {len(failing)} coordinates above tol {tol}")
    return GradCheckReport(numeric=numeric, analytic=analytic, relative_errors=rel, tol=tol, failing=failing)


def require_finite(values: np.ndarray, what: str) -> np.ndarray:
    """Raise NonFiniteError naming the first bad flat index."""
    arr = np.asarray(values)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteError(f"{what} has a non-finite entry at flat index {int(bad[0])}", index=int(bad[0]))
    return arr


def uniform_init(rng: Optional[Rng], shape, scale: float) -> np.ndarray:
    if rng is None:
        return np.zeros(shape)
    return rng.uniform_range(-scale, scale, shape)
