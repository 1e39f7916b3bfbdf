"""
Preprocessing Service

Last-observation-carried-forward imputation and the [0, 1] min-max scaler.
"""

import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Tuple

import numpy as np
import pandas as pd

from vitalcast.core.errors import ContractViolation, ImputationError, LeakageError
from vitalcast.models.patient_model import FEATURES, N_FEATURES, VITALS, Cohort, PatientRecord

logger = logging.getLogger(__name__)


def impute_locf(record: PatientRecord) -> PatientRecord:
    """
    Fill missing cells with the latest earlier reading of the same vital.

    Cells before the first observation take the first observed value.

    Raises:
        ImputationError: a vital has no observation at all
    """
    if record.is_complete:
        return record
    frame = pd.DataFrame(record.vitals, columns=list(VITALS))
    empty = [vital for vital in VITALS if frame[vital].isna().all()]
    if empty:
        raise ImputationError(
            f"patient {record.patient_id}: no observed values for {', '.join(empty)}"
        )
    filled = frame.ffill().bfill().to_numpy(dtype=np.float64)
    return record.with_vitals(filled)


def impute_cohort(cohort: Cohort) -> Cohort:
    imputed = cohort.map(impute_locf)
    if cohort.missing_count:
        logger.info(f"[INGEST] ✓ Imputed {cohort.missing_count} missing cells across {len(cohort)} patients")
    return imputed


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Per-feature affine map onto [0, 1]; constant features map to 0.5."""

    mins: np.ndarray
    maxs: np.ndarray
    fitted_on: str
    fitted_patient_ids: FrozenSet[str] = frozenset()

    def __post_init__(self):
        mins = np.array(self.mins, dtype=np.float64)
        maxs = np.array(self.maxs, dtype=np.float64)
        if mins.shape != (N_FEATURES,) or maxs.shape != (N_FEATURES,):
            raise ContractViolation(f"scaler needs {N_FEATURES} mins and maxs, got {mins.shape}, {maxs.shape}")
        if np.any(maxs < mins):
            raise ContractViolation("scaler max must be >= min for every feature")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "fitted_patient_ids", frozenset(self.fitted_patient_ids))

    @property
    def constant(self) -> Tuple[bool, ...]:
        return tuple(bool(c) for c in self.maxs == self.mins)

    @property
    def constant_features(self) -> Tuple[str, ...]:
        return tuple(name for name, flag in zip(FEATURES, self.constant) if flag)

    def _span(self) -> np.ndarray:
        span = self.maxs - self.mins
        return np.where(span == 0.0, 1.0, span)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Scale a (..., 7) array; out-of-range values are clamped to [0, 1]."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != N_FEATURES:
            raise ContractViolation(f"expected trailing dimension {N_FEATURES}, got {values.shape}")
        scaled = np.clip((values - self.mins) / self._span(), 0.0, 1.0)
        return np.where(np.asarray(self.constant), 0.5, scaled)

    def invert(self, scaled: np.ndarray) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        if scaled.shape[-1] != N_FEATURES:
            raise ContractViolation(f"expected trailing dimension {N_FEATURES}, got {scaled.shape}")
        return self.mins + scaled * (self.maxs - self.mins)

    def apply_feature(self, values: np.ndarray, index: int) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.constant[index]:
            return np.full_like(values, 0.5)
        span = self.maxs[index] - self.mins[index]
        return np.clip((values - self.mins[index]) / span, 0.0, 1.0)

    def invert_feature(self, scaled: np.ndarray, index: int) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        return self.mins[index] + scaled * (self.maxs[index] - self.mins[index])

    def scale_record(self, record: PatientRecord) -> np.ndarray:
        """p x 7 scaled feature matrix of an imputed record."""
        if not record.is_complete:
            raise ContractViolation(f"patient {record.patient_id}: impute before scaling")
        return self.apply(record.features())


def fit_scaler(cohort: Cohort, fitted_on: str = "train") -> MinMaxScaler:
    """Fit per-feature ranges over every time step of the given (training) patients."""
    if len(cohort) == 0:
        raise ContractViolation("cannot fit a scaler on an empty cohort")
    incomplete = [r.patient_id for r in cohort if not r.is_complete]
    if incomplete:
        raise ContractViolation(f"impute before fitting the scaler (patients {', '.join(incomplete[:5])})")
    stacked = np.vstack([r.features() for r in cohort])
    scaler = MinMaxScaler(
        mins=stacked.min(axis=0),
        maxs=stacked.max(axis=0),
        fitted_on=fitted_on,
        fitted_patient_ids=frozenset(cohort.ids),
    )
    if scaler.constant_features:
        logger.warning(f"[SCALER] ⚠️ Constant features map to 0.5: {', '.join(scaler.constant_features)}")
    return scaler


def check_no_leakage(scaler: MinMaxScaler, patient_ids: Iterable[str]) -> None:
    """Raise LeakageError if the scaler saw any of these patients during fitting."""
    leaked = sorted(set(patient_ids) & scaler.fitted_patient_ids)
    if leaked:
        raise LeakageError(
            f"scaler fitted on split {scaler.fitted_on!r} includes evaluation patients {', '.join(leaked[:5])}"
        )
