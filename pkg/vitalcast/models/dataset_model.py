"""
Dataset Model

Sliding-window tensors and patient-level split plans.
"""

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from vitalcast.core.errors import CheckpointError, ContractViolation
from vitalcast.models.patient_model import N_VITALS, vital_index

# Flat binary export layout (little-endian):
#   4 bytes  magic  b"VCWD"
#   u16      format version
#   u32 x 3  S, M, K
#   f64 x S*M*K  windows, row-major
WINDOW_MAGIC = b"VCWD"
WINDOW_FORMAT_VERSION = 1
_WINDOW_HEADER = struct.Struct("<4sHIII")


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """
    S windows of M steps x K features with the true future vital vectors.

    future[s, j] holds the five vitals at t+j+1 (scaled like the windows);
    future_raw holds the same steps in original units.
    """

    windows: np.ndarray
    future: np.ndarray
    future_raw: np.ndarray
    patient_ids: np.ndarray
    starts: np.ndarray
    horizons: Tuple[int, ...]
    target_vital: str

    def __post_init__(self):
        if self.windows.ndim != 3:
            raise ContractViolation(f"windows must be S x M x K, got {self.windows.shape}")
        s = self.windows.shape[0]
        h_max = max(self.horizons)
        for name in ("future", "future_raw"):
            arr = getattr(self, name)
            if arr.shape != (s, h_max, N_VITALS):
                raise ContractViolation(f"{name} must be {(s, h_max, N_VITALS)}, got {arr.shape}")
        if self.patient_ids.shape != (s,) or self.starts.shape != (s,):
            raise ContractViolation("provenance arrays must have one entry per window")
        vital_index(self.target_vital)

    def __len__(self) -> int:
        return int(self.windows.shape[0])

    @property
    def S(self) -> int:
        return int(self.windows.shape[0])

    @property
    def M(self) -> int:
        return int(self.windows.shape[1])

    @property
    def K(self) -> int:
        return int(self.windows.shape[2])

    @property
    def h_max(self) -> int:
        return max(self.horizons)

    @property
    def target_index(self) -> int:
        return vital_index(self.target_vital)

    @property
    def targets(self) -> Dict[int, np.ndarray]:
        """Target vital at t+h (window units) for every configured horizon."""
        ti = self.target_index
        return {h: self.future[:, h - 1, ti] for h in self.horizons}

    def target(self, h: int) -> np.ndarray:
        self._check_horizon(h)
        return self.future[:, h - 1, self.target_index]

    def target_raw(self, h: int) -> np.ndarray:
        self._check_horizon(h)
        return self.future_raw[:, h - 1, self.target_index]

    def next_step(self) -> np.ndarray:
        """S x 5 true vitals at t+1, the generator's training target."""
        return self.future[:, 0, :]

    def flattened(self) -> np.ndarray:
        return self.windows.reshape(self.S, self.M * self.K)

    def subset(self, indices: Union[np.ndarray, Sequence[int]]) -> "WindowedDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            windows=self.windows[idx],
            future=self.future[idx],
            future_raw=self.future_raw[idx],
            patient_ids=self.patient_ids[idx],
            starts=self.starts[idx],
        )

    def with_windows(self, windows: np.ndarray) -> "WindowedDataset":
        if windows.shape != self.windows.shape:
            raise ContractViolation(f"replacement windows {windows.shape} != {self.windows.shape}")
        return replace(self, windows=windows)

    def _check_horizon(self, h: int) -> None:
        if h < 1 or h > self.h_max:
            raise ContractViolation(f"horizon {h} outside 1..{self.h_max}")

    def export_binary(self, path: Union[str, Path]) -> None:
        header = _WINDOW_HEADER.pack(WINDOW_MAGIC, WINDOW_FORMAT_VERSION, self.S, self.M, self.K)
        body = np.ascontiguousarray(self.windows, dtype="<f8").tobytes()
        Path(path).write_bytes(header + body)


def load_windowed_binary(path: Union[str, Path]) -> np.ndarray:
    """Read a window tensor written by WindowedDataset.export_binary."""
    raw = Path(path).read_bytes()
    if len(raw) < _WINDOW_HEADER.size:
        raise CheckpointError(f"{path}: truncated window export")
    magic, version, s, m, k = _WINDOW_HEADER.unpack_from(raw)
    if magic != WINDOW_MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != WINDOW_FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported window export version {version}")
    expected = _WINDOW_HEADER.size + 8 * s * m * k
    if len(raw) != expected:
        raise CheckpointError(f"{path}: expected {expected} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8", offset=_WINDOW_HEADER.size).reshape(s, m, k).astype(np.float64)


class SplitPlan(BaseModel):
    """Patient-level split fractions; predictive + generative partition the training share."""

    train: float = Field(0.6, gt=0, lt=1)
    validation: float = Field(0.2, gt=0, lt=1)
    test: float = Field(0.2, gt=0, lt=1)
    predictive: float = Field(0.4, gt=0, lt=1)
    generative: float = Field(0.2, gt=0, lt=1)
    seed: int = Field(0, ge=0)

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _fractions_consistent(self):
        if abs(self.train + self.validation + self.test - 1.0) > 1e-9:
            raise ValueError("train + validation + test fractions must sum to 1")
        if abs(self.predictive + self.generative - self.train) > 1e-9:
            raise ValueError("predictive + generative fractions must equal the train fraction")
        return self


@dataclass(frozen=True)
class CohortSplit:
    """Patient ids per split. predictive/generative partition train."""

    train: Tuple[str, ...]
    validation: Tuple[str, ...]
    test: Tuple[str, ...]
    predictive: Tuple[str, ...]
    generative: Tuple[str, ...]
    seed: int = 0
