"""
Windowing Service

Stride-1 sliding windows over each patient's M x 7 feature matrix.
"""

import logging
from typing import Iterable, List, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from vitalcast.core.errors import ContractViolation
from vitalcast.models.dataset_model import WindowedDataset
from vitalcast.models.patient_model import N_FEATURES, N_VITALS, Cohort, PatientRecord, vital_index
from vitalcast.services.preprocessing import MinMaxScaler

logger = logging.getLogger(__name__)


def window_count(p: int, window_length: int, h_max: int) -> int:
    return max(0, p - window_length - h_max + 1)


def _features(record: PatientRecord, scaler: Optional[MinMaxScaler]) -> np.ndarray:
    if not record.is_complete:
        raise ContractViolation(f"patient {record.patient_id}: impute before windowing")
    raw = record.features()
    return scaler.apply(raw) if scaler is not None else raw


def make_windows(
    cohort: Cohort,
    window_length: int,
    horizons: Iterable[int],
    target_vital: str,
    scaler: Optional[MinMaxScaler] = None,
) -> WindowedDataset:
    """
    Build the S x M x 7 window tensor with the true future vitals up to max(horizons).

    Patients shorter than M + h_max contribute no windows. With a scaler, windows
    and `future` are scaled while `future_raw` stays in original units.
    """
    horizons = tuple(sorted(set(int(h) for h in horizons)))
    if window_length < 1:
        raise ContractViolation(f"window length must be >= 1, got {window_length}")
    if not horizons or horizons[0] < 1:
        raise ContractViolation("horizons must be a non-empty set of integers >= 1")
    vital_index(target_vital)
    h_max = horizons[-1]

    windows: List[np.ndarray] = [np.empty((0, window_length, N_FEATURES))]
    future: List[np.ndarray] = [np.empty((0, h_max, N_VITALS))]
    future_raw: List[np.ndarray] = [np.empty((0, h_max, N_VITALS))]
    pids: List[np.ndarray] = [np.empty(0, dtype=object)]
    starts: List[np.ndarray] = [np.empty(0, dtype=np.int64)]

    for record in cohort:
        n = window_count(record.p, window_length, h_max)
        if n == 0:
            continue
        feats = _features(record, scaler)
        windows.append(sliding_window_view(feats, (window_length, N_FEATURES))[:n, 0])
        tail = feats[window_length:, :N_VITALS]
        future.append(sliding_window_view(tail, (h_max, N_VITALS))[:n, 0])
        raw_tail = record.vitals[window_length:]
        future_raw.append(sliding_window_view(raw_tail, (h_max, N_VITALS))[:n, 0])
        pids.append(np.full(n, record.patient_id, dtype=object))
        starts.append(np.arange(n, dtype=np.int64))

    dataset = WindowedDataset(
        windows=np.ascontiguousarray(np.concatenate(windows)),
        future=np.ascontiguousarray(np.concatenate(future)),
        future_raw=np.ascontiguousarray(np.concatenate(future_raw)),
        patient_ids=np.concatenate(pids),
        starts=np.concatenate(starts),
        horizons=horizons,
        target_vital=target_vital,
    )
    logger.debug(f"[WINDOWS] {dataset.S} windows from {len(cohort)} patients (M={window_length}, h_max={h_max})")
    return dataset


def latest_window(record: PatientRecord, window_length: int, scaler: Optional[MinMaxScaler] = None) -> np.ndarray:
    """The last M steps of a patient, for live forecasting."""
    if record.p < window_length:
        raise ContractViolation(
            f"patient {record.patient_id} has {record.p} steps, needs at least {window_length}"
        )
    return _features(record, scaler)[-window_length:].copy()
