"""
Predictor Contract

Every forecaster maps a batch of windows (B x M x K) to outputs (B x output_dim).
Predictive models have output_dim 1 (the target vital); the generative model
outputs the five vitals of the next step.
"""

from abc import ABC, abstractmethod

import numpy as np

from vitalcast.core.errors import ContractViolation


class Forecaster(ABC):
    """Trained, immutable model. predict never mutates parameters."""

    kind: str = "forecaster"

    @property
    @abstractmethod
    def output_dim(self) -> int:
        ...

    @abstractmethod
    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        """B x M x K windows -> B x output_dim."""

    def predict(self, window: np.ndarray) -> np.ndarray:
        window = np.asarray(window, dtype=np.float64)
        if window.ndim != 2:
            raise ContractViolation(f"expected one M x K window, got shape {window.shape}")
        return self.predict_batch(window[None])[0]


def as_batch(windows: np.ndarray) -> np.ndarray:
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 2:
        windows = windows[None]
    if windows.ndim != 3:
        raise ContractViolation(f"expected B x M x K windows, got shape {windows.shape}")
    return windows
