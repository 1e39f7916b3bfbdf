"""
Ingest Service

Reads and writes the patient CSV contract::

    patient_id,timestamp,age,gender,heart_rate,resp_rate,spo2,temp,sbp

UTF-8, ISO-8601 timestamps on a 5-minute grid, empty cell = missing reading,
gender encoded 0/1. Gaps in the grid are materialised as missing rows.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from vitalcast.core.errors import CsvContractError
from vitalcast.models.patient_model import (
    CADENCE,
    PHYSIOLOGICAL_RANGES,
    VITALS,
    Cohort,
    PatientRecord,
)
from vitalcast.services.preprocessing import impute_locf

logger = logging.getLogger(__name__)

CSV_COLUMNS: Tuple[str, ...] = ("patient_id", "timestamp", "age", "gender") + VITALS
DEFAULT_START = pd.Timestamp("2024-01-01T00:00:00")

_LINE_IN_MESSAGE = re.compile(r"line (\d+)")


def _read_raw(path: Union[str, Path]) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise CsvContractError([(1, "file is empty")]) from None
    except pd.errors.ParserError as exc:
        match = _LINE_IN_MESSAGE.search(str(exc))
        line = int(match.group(1)) if match else 0
        raise CsvContractError([(line, f"malformed row: {exc}")]) from None
    except UnicodeDecodeError as exc:
        raise CsvContractError([(0, f"file is not UTF-8: {exc}")]) from None


def _parse_numeric(frame: pd.DataFrame, column: str, lines: np.ndarray, issues: List[Tuple[int, str]]) -> pd.Series:
    text = frame[column].astype(str).str.strip()
    empty = text == ""
    parsed = pd.to_numeric(text.where(~empty), errors="coerce")
    for line in lines[(~empty & parsed.isna()).to_numpy()]:
        issues.append((int(line), f"non-numeric value in column {column}"))
    return parsed


def ingest_csv(path: Union[str, Path]) -> Cohort:
    """
    Parse a patient CSV into a Cohort.

    Raises:
        CsvContractError: listing every contract violation with its line number
    """
    frame = _read_raw(path)
    issues: List[Tuple[int, str]] = []

    unknown = [c for c in frame.columns if c not in CSV_COLUMNS]
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    for column in unknown:
        issues.append((1, f"unknown column {column!r}"))
    for column in missing:
        issues.append((1, f"missing column {column!r}"))
    if issues:
        raise CsvContractError(issues)

    lines = np.arange(len(frame)) + 2  # header is line 1

    short_rows = frame.isna().any(axis=1).to_numpy()
    for line in lines[short_rows]:
        issues.append((int(line), "row has too few fields"))
    frame = frame.fillna("")

    patient_ids = frame["patient_id"].astype(str).str.strip()
    for line in lines[(patient_ids == "").to_numpy()]:
        issues.append((int(line), "empty patient_id"))

    timestamps = pd.to_datetime(frame["timestamp"].str.strip(), format="ISO8601", errors="coerce")
    for line in lines[timestamps.isna().to_numpy()]:
        issues.append((int(line), "invalid timestamp"))

    numeric: Dict[str, pd.Series] = {}
    for column in ("age", "gender") + VITALS:
        numeric[column] = _parse_numeric(frame, column, lines, issues)

    for column in ("age", "gender"):
        for line in lines[(frame[column].str.strip() == "").to_numpy()]:
            issues.append((int(line), f"missing {column}"))
    bad_gender = numeric["gender"].notna() & ~numeric["gender"].isin([0, 1])
    for line in lines[bad_gender.to_numpy()]:
        issues.append((int(line), "gender must be 0 or 1"))

    keyed = pd.DataFrame({"pid": patient_ids, "ts": timestamps, "line": lines})
    valid_key = keyed["ts"].notna() & (keyed["pid"] != "")
    first_seen: Dict[Tuple[str, pd.Timestamp], int] = {}
    for pid, ts, line in keyed[valid_key].itertuples(index=False):
        key = (pid, ts)
        if key in first_seen:
            issues.append((int(line), f"duplicate (patient_id, timestamp) first seen on line {first_seen[key]}"))
        else:
            first_seen[key] = int(line)

    if issues:
        raise CsvContractError(issues)

    records = []
    table = pd.DataFrame({"patient_id": patient_ids, "timestamp": timestamps, "line": lines})
    for column, values in numeric.items():
        table[column] = values
    for pid, group in table.groupby("patient_id", sort=False):
        group = group.sort_values("timestamp")
        start = group["timestamp"].iloc[0]
        delta = group["timestamp"] - start
        off_grid = (delta % CADENCE) != pd.Timedelta(0)
        for line in group.loc[off_grid, "line"]:
            issues.append((int(line), "timestamp is not on the 5-minute grid"))
        for column in ("age", "gender"):
            distinct = group[column].dropna().unique()
            if len(distinct) > 1:
                conflict = group.loc[group[column] != group[column].iloc[0], "line"].iloc[0]
                issues.append((int(conflict), f"conflicting {column} for patient {pid}"))
        if off_grid.any():
            continue

        offsets = (delta // CADENCE).to_numpy(dtype=np.int64)
        p = int(offsets[-1]) + 1
        vitals = np.full((p, len(VITALS)), np.nan)
        vitals[offsets] = group[list(VITALS)].to_numpy(dtype=np.float64)
        records.append(
            PatientRecord(
                patient_id=str(pid),
                age=float(group["age"].iloc[0]),
                gender=int(group["gender"].iloc[0]),
                vitals=vitals,
                start=start,
            )
        )

    if issues:
        raise CsvContractError(issues)

    cohort = Cohort(tuple(records))
    logger.info(f"[INGEST] ✓ Loaded {len(cohort)} patients from {path} ({cohort.missing_count} missing cells)")
    return cohort


def write_cohort_csv(cohort: Cohort, path: Union[str, Path], start: pd.Timestamp = DEFAULT_START) -> None:
    """Write a cohort in the patient CSV contract (`\\n` line endings, trailing newline)."""
    frames = []
    for record in cohort:
        origin = record.start if record.start is not None else start
        stamps = [(origin + i * CADENCE).isoformat() for i in range(record.p)]
        frame = pd.DataFrame(record.vitals, columns=list(VITALS))
        frame.insert(0, "patient_id", record.patient_id)
        frame.insert(1, "timestamp", stamps)
        age = int(record.age) if float(record.age).is_integer() else record.age
        frame.insert(2, "age", age)
        frame.insert(3, "gender", int(record.gender))
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=list(CSV_COLUMNS))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, na_rep="", lineterminator="\n")
    logger.info(f"[INGEST] ✓ Wrote {len(cohort)} patients ({len(table)} rows) to {path}")


@dataclass
class PatientSummary:
    patient_id: str
    p: int
    missing_cells: int


@dataclass
class ValidationSummary:
    patients: List[PatientSummary] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def total_missing(self) -> int:
        return sum(p.missing_cells for p in self.patients)


def validate_csv(path: Union[str, Path]) -> ValidationSummary:
    """Dry run of ingestion and imputation; range excursions become warnings."""
    cohort = ingest_csv(path)
    summary = ValidationSummary()
    for record in cohort:
        impute_locf(record)
        summary.patients.append(PatientSummary(record.patient_id, record.p, record.missing_count))
        for j, vital in enumerate(VITALS):
            low, high = PHYSIOLOGICAL_RANGES[vital]
            column = record.vitals[:, j]
            observed = column[~np.isnan(column)]
            outside = int(((observed < low) | (observed > high)).sum())
            if outside:
                summary.warnings.append(
                    f"patient {record.patient_id}: {outside} {vital} value(s) outside [{low:g}, {high:g}]"
                )
    return summary
