"""
Patient Model

Per-patient multivariate vital-sign series and the cohort container.

Feature layout used everywhere downstream (K = 7)::

    heart_rate, resp_rate, spo2, temp, sbp, age, gender

The five vitals come first so a generated step (five values) can be appended to a
window by re-using the static columns of the latest row.
"""

from dataclasses import dataclass, replace
from typing import Dict, Iterable, Iterator, Optional, Tuple

import numpy as np
import pandas as pd

from vitalcast.core.errors import ContractViolation

VITALS: Tuple[str, ...] = ("heart_rate", "resp_rate", "spo2", "temp", "sbp")
STATICS: Tuple[str, ...] = ("age", "gender")
FEATURES: Tuple[str, ...] = VITALS + STATICS

N_VITALS = len(VITALS)
N_FEATURES = len(FEATURES)

CADENCE = pd.Timedelta(minutes=5)

# Plausibility ranges; synthgen clips to them and `validate` warns outside them.
PHYSIOLOGICAL_RANGES: Dict[str, Tuple[float, float]] = {
    "heart_rate": (30.0, 200.0),  # bpm
    "resp_rate": (5.0, 50.0),  # breaths/min
    "spo2": (70.0, 100.0),  # %
    "temp": (34.0, 42.0),  # degrees C
    "sbp": (60.0, 250.0),  # mmHg
}


def vital_index(name: str) -> int:
    try:
        return VITALS.index(name)
    except ValueError:
        raise ContractViolation(f"unknown vital {name!r}; expected one of {', '.join(VITALS)}") from None


@dataclass(frozen=True, eq=False)
class PatientRecord:
    """One patient: p x 5 vitals at 5-minute cadence (NaN = missing) plus static attributes."""

    patient_id: str
    age: float
    gender: int
    vitals: np.ndarray
    start: Optional[pd.Timestamp] = None
    archetype: Optional[int] = None

    def __post_init__(self):
        vitals = np.array(self.vitals, dtype=np.float64)
        if vitals.ndim != 2 or vitals.shape[1] != N_VITALS or vitals.shape[0] < 1:
            raise ContractViolation(
                f"patient {self.patient_id}: vitals must be p x {N_VITALS} with p >= 1, got {vitals.shape}"
            )
        if self.gender not in (0, 1):
            raise ContractViolation(f"patient {self.patient_id}: gender must be 0 or 1, got {self.gender!r}")
        if not np.isfinite(self.age):
            raise ContractViolation(f"patient {self.patient_id}: age must be finite")
        vitals.setflags(write=False)
        object.__setattr__(self, "vitals", vitals)

    @property
    def p(self) -> int:
        return int(self.vitals.shape[0])

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.vitals)

    @property
    def missing_count(self) -> int:
        return int(self.missing_mask.sum())

    @property
    def is_complete(self) -> bool:
        return self.missing_count == 0

    def features(self) -> np.ndarray:
        """p x 7 matrix with age and gender broadcast to every time step."""
        statics = np.tile([float(self.age), float(self.gender)], (self.p, 1))
        return np.hstack([self.vitals, statics])

    def with_vitals(self, vitals: np.ndarray) -> "PatientRecord":
        return replace(self, vitals=vitals)


@dataclass(frozen=True, eq=False)
class Cohort:
    records: Tuple[PatientRecord, ...]

    def __post_init__(self):
        records = tuple(self.records)
        seen = set()
        for record in records:
            if record.patient_id in seen:
                raise ContractViolation(f"duplicate patient_id {record.patient_id!r} in cohort")
            seen.add(record.patient_id)
        object.__setattr__(self, "records", records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PatientRecord]:
        return iter(self.records)

    @property
    def ids(self) -> Tuple[str, ...]:
        return tuple(r.patient_id for r in self.records)

    def by_id(self, patient_id: str) -> PatientRecord:
        for record in self.records:
            if record.patient_id == patient_id:
                return record
        raise KeyError(patient_id)

    def subset(self, patient_ids: Iterable[str]) -> "Cohort":
        index = {r.patient_id: r for r in self.records}
        try:
            return Cohort(tuple(index[pid] for pid in patient_ids))
        except KeyError as exc:
            raise ContractViolation(f"patient {exc.args[0]!r} is not part of the cohort") from None

    def map(self, fn) -> "Cohort":
        return Cohort(tuple(fn(r) for r in self.records))

    @property
    def missing_count(self) -> int:
        return sum(r.missing_count for r in self.records)

    @property
    def archetypes(self) -> Dict[str, Optional[int]]:
        return {r.patient_id: r.archetype for r in self.records}
