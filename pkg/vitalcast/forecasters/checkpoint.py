"""
Checkpoint I/O

Little-endian binary layout::

    4 bytes   magic  b"VCKP"
    u16       format version (1)
    u8        model kind (1 lstm, 2 mlp, 3 arima, 4 gpr, 5 krr)
    u8        flags (bit 0: scaler arrays appended)
    u16       array count
    per array:
        u8          ndim
        u32 x ndim  dims
        f64 x prod(dims)  row-major data
    u32       CRC-32 of every preceding byte

Scalars travel as 1-element arrays. When the scaler flag is set the last two
arrays are its mins and maxs (7 each).
"""

import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from vitalcast.core.errors import CheckpointError, ContractViolation
from vitalcast.forecasters.arima import ArimaForecaster
from vitalcast.forecasters.base import Forecaster
from vitalcast.forecasters.kernels import KernelForecaster, KernelPosterior
from vitalcast.forecasters.lstm import LstmForecaster, LstmParams
from vitalcast.forecasters.mlp import MlpForecaster, MlpParams
from vitalcast.services.preprocessing import MinMaxScaler

logger = logging.getLogger(__name__)

MAGIC = b"VCKP"
FORMAT_VERSION = 1
KIND_CODES = {"lstm": 1, "mlp": 2, "arima": 3, "gpr": 4, "krr": 5}
_KIND_NAMES = {code: name for name, code in KIND_CODES.items()}
FLAG_SCALER = 0x01

_HEADER = struct.Struct("<4sHBBH")
_CRC = struct.Struct("<I")


@dataclass(frozen=True)
class Checkpoint:
    model: Forecaster
    scaler: Optional[MinMaxScaler] = None


def _model_arrays(model: Forecaster) -> List[np.ndarray]:
    if isinstance(model, LstmForecaster):
        return list(model.params.arrays)
    if isinstance(model, MlpForecaster):
        return list(model.params.arrays)
    if isinstance(model, ArimaForecaster):
        return [np.array([model.horizon, model.target_index, model.history], dtype=np.float64)]
    if isinstance(model, KernelForecaster):
        p = model.posterior
        return [
            p.x_train,
            p.alpha[:, [model.column]],
            p.y_mean[[model.column]],
            np.array([p.length_scale, p.signal_var, p.reg]),
        ]
    raise ContractViolation(f"no checkpoint layout for {type(model).__name__}")


def _model_from_arrays(kind: str, arrays: List[np.ndarray]) -> Forecaster:
    try:
        if kind == "lstm":
            return LstmForecaster(LstmParams(*arrays))
        if kind == "mlp":
            return MlpForecaster(MlpParams(tuple(arrays[0::2]), tuple(arrays[1::2])))
        if kind == "arima":
            horizon, target_index, history = (int(v) for v in arrays[0])
            return ArimaForecaster(horizon, target_index, history)
        x_train, alpha, y_mean, hyper = arrays
        posterior = KernelPosterior(x_train, alpha, y_mean, float(hyper[0]), float(hyper[1]), float(hyper[2]))
        return KernelForecaster(posterior, 0, kind)
    except (ValueError, TypeError, ContractViolation) as exc:
        raise CheckpointError(f"{kind} checkpoint arrays are inconsistent: {exc}") from exc


def save_params(model: Forecaster, path: Union[str, Path], scaler: Optional[MinMaxScaler] = None) -> None:
    kind = getattr(model, "kind", None)
    if kind not in KIND_CODES:
        raise ContractViolation(f"cannot checkpoint model kind {kind!r}")
    arrays = _model_arrays(model)
    flags = 0
    if scaler is not None:
        arrays += [scaler.mins, scaler.maxs]
        flags |= FLAG_SCALER

    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, KIND_CODES[kind], flags, len(arrays))]
    for arr in arrays:
        arr = np.ascontiguousarray(arr, dtype="<f8")
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    body = b"".join(parts)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(body + _CRC.pack(zlib.crc32(body)))
    logger.info(f"[CHECKPOINT] ✓ Saved {kind} model ({len(arrays)} arrays) to {path}")


def load_params(path: Union[str, Path]) -> Checkpoint:
    """
    Raises:
        CheckpointError: wrong magic, unsupported version, truncation or CRC mismatch
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < _HEADER.size + _CRC.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, code, flags, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    if code not in _KIND_NAMES:
        raise CheckpointError(f"{path}: unknown model kind code {code}")
    body, (crc,) = raw[: -_CRC.size], _CRC.unpack(raw[-_CRC.size :])
    if zlib.crc32(body) != crc:
        raise CheckpointError(f"{path}: CRC mismatch, file is corrupt")

    arrays: List[np.ndarray] = []
    offset = _HEADER.size
    try:
        for _ in range(count):
            (ndim,) = struct.unpack_from("<B", body, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", body, offset)
            offset += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(body, dtype="<f8", count=size, offset=offset)
            offset += 8 * size
            arrays.append(data.reshape(shape).astype(np.float64))
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated array data ({exc})") from exc
    if offset != len(body):
        raise CheckpointError(f"{path}: {len(body) - offset} trailing bytes after the last array")

    scaler = None
    if flags & FLAG_SCALER:
        if len(arrays) < 2:
            raise CheckpointError(f"{path}: scaler flag set but arrays are missing")
        mins, maxs = arrays[-2:]
        arrays = arrays[:-2]
        try:
            scaler = MinMaxScaler(mins=mins, maxs=maxs, fitted_on="checkpoint")
        except ContractViolation as exc:
            raise CheckpointError(f"{path}: invalid scaler arrays: {exc}") from exc
    kind = _KIND_NAMES[code]
    return Checkpoint(model=_model_from_arrays(kind, arrays), scaler=scaler)
