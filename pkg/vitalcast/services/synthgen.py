"""
Synthetic Cohort Generator

Reproducible vital-sign cohorts with archetype structure, used in place of a
private hospital dataset.

Each vital of a patient is::

    baseline(archetype) + circadian sinusoid(patient phase)
        + latent_sd * (sqrt(SHARED) * loading * shared AR(2)  +  sqrt(1 - SHARED) * own AR(2))
        + noise_sd * white noise

The shared AR(2) stream is common to every patient of an archetype at the same
time index, which is what makes same-archetype patients informative about each
other. Patients are admitted at random times of day, so circadian phases are
drawn per patient and carry no archetype information. Values are clipped to physiological ranges and rounded like bedside readings.
"""

import logging
from typing import Dict, NamedTuple

import numpy as np
from scipy.signal import lfilter

from vitalcast.core.numerics import Rng
from vitalcast.models.patient_model import PHYSIOLOGICAL_RANGES, VITALS, Cohort, PatientRecord
from vitalcast.models.synth_model import CohortSpec
from vitalcast.services.ingest import DEFAULT_START

logger = logging.getLogger(__name__)


class VitalProfile(NamedTuple):
    base: float  # population baseline
    archetype_step: float  # baseline shift between neighbouring archetypes
    latent_sd: float  # scale of the slow AR(2) component
    noise_sd: float  # measurement noise
    circadian_amp: float
    decimals: int


VITAL_PROFILES: Dict[str, VitalProfile] = {
    "heart_rate": VitalProfile(80.0, 8.0, 10.0, 4.5, 3.0, 1),
    "resp_rate": VitalProfile(18.0, 2.0, 2.5, 1.2, 0.8, 1),
    "spo2": VitalProfile(96.0, -1.0, 1.2, 0.6, 0.3, 1),
    "temp": VitalProfile(37.0, 0.2, 0.35, 0.1, 0.2, 2),
    "sbp": VitalProfile(122.0, 10.0, 12.0, 5.0, 4.0, 1),
}

AR_COEFFS = (1.5, -0.56)  # characteristic roots 0.8 and 0.7
SHARED_FRACTION = 0.75
CIRCADIAN_PERIOD = 288  # steps per day at 5-minute cadence
AGE_RANGE = (45.0, 72.0)  # archetype mean ages span this interval
AGE_SD = 8.0
BURN_IN = 200


def _ar2_unit_variance(phi1: float, phi2: float) -> float:
    """Stationary variance of an AR(2) driven by unit-variance innovations."""
    return (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2) ** 2 - phi1**2))


_AR_SCALE = 1.0 / np.sqrt(_ar2_unit_variance(*AR_COEFFS))


def ar2_series(rng: Rng, n: int) -> np.ndarray:
    """Unit-variance stationary AR(2) sample of length n."""
    innovations = rng.normal(n + BURN_IN)
    series = lfilter([1.0], [1.0, -AR_COEFFS[0], -AR_COEFFS[1]], innovations)
    return series[BURN_IN:] * _AR_SCALE


class _Archetype(NamedTuple):
    offsets: np.ndarray  # (5,)
    loadings: np.ndarray  # (5,)
    age_mean: float
    shared: np.ndarray  # (steps,)


def _archetypes(spec: CohortSpec, root: Rng) -> list:
    count = spec.n_archetypes
    ages = np.linspace(*AGE_RANGE, count) if count > 1 else np.array([np.mean(AGE_RANGE)])
    steps = np.array([VITAL_PROFILES[v].archetype_step for v in VITALS])
    archetypes = []
    for a in range(count):
        rng = root.substream("archetype", a)
        magnitudes = rng.uniform_range(0.6, 1.0, len(VITALS))
        signs = np.where(rng.uniform(len(VITALS)) < 0.5, -1.0, 1.0)
        archetypes.append(
            _Archetype(
                offsets=(a - (count - 1) / 2.0) * steps,
                loadings=magnitudes * signs,
                age_mean=float(ages[a]),
                shared=ar2_series(rng.substream("shared"), spec.steps_per_patient),
            )
        )
    return archetypes


def _patient(index: int, archetype: int, profile: _Archetype, spec: CohortSpec, root: Rng) -> PatientRecord:
    rng = root.substream("patient", index)
    steps = spec.steps_per_patient
    t = np.arange(steps)
    phase = 2.0 * np.pi * rng.substream("phase").uniform(1)[0]
    circadian = np.sin(2.0 * np.pi * t / CIRCADIAN_PERIOD + phase)

    vitals = np.empty((steps, len(VITALS)))
    for j, vital in enumerate(VITALS):
        vp = VITAL_PROFILES[vital]
        own = ar2_series(rng.substream("own", vital), steps)
        latent = np.sqrt(SHARED_FRACTION) * profile.loadings[j] * profile.shared + np.sqrt(1.0 - SHARED_FRACTION) * own
        noise = rng.substream("noise", vital).normal(steps)
        column = (
            vp.base
            + profile.offsets[j]
            + vp.circadian_amp * circadian
            + vp.latent_sd * latent
            + vp.noise_sd * noise
        )
        low, high = PHYSIOLOGICAL_RANGES[vital]
        vitals[:, j] = np.round(np.clip(column, low, high), vp.decimals)

    if spec.missing_rate > 0:
        vitals = _inject_missing(vitals, spec.missing_rate, rng.substream("missing"))

    statics = rng.substream("statics")
    age = float(np.clip(np.round(profile.age_mean + AGE_SD * statics.normal(1)[0]), 18, 95))
    gender = int(statics.uniform(1)[0] < 0.5)
    return PatientRecord(
        patient_id=f"P{index + 1:03d}",
        age=age,
        gender=gender,
        vitals=vitals,
        start=DEFAULT_START,
        archetype=archetype,
    )


def _inject_missing(vitals: np.ndarray, rate: float, rng: Rng) -> np.ndarray:
    """Blank cells at `rate`; every column keeps at least one observed cell."""
    steps, width = vitals.shape
    mask = (rng.uniform(steps * width) < rate).reshape(steps, width)
    for j in np.flatnonzero(mask.all(axis=0)):
        mask[int(rng.permutation(steps)[0]), j] = False
    out = vitals.copy()
    out[mask] = np.nan
    return out


def generate_cohort(spec: CohortSpec) -> Cohort:
    """Pure function of spec; patient i belongs to archetype i mod n_archetypes."""
    root = Rng(spec.seed)
    archetypes = _archetypes(spec, root)
    records = tuple(
        _patient(i, i % spec.n_archetypes, archetypes[i % spec.n_archetypes], spec, root)
        for i in range(spec.n_patients)
    )
    cohort = Cohort(records)
    logger.info(
        f"[SYNTHGEN] ✓ Generated {len(cohort)} patients x {spec.steps_per_patient} steps "
        f"({spec.n_archetypes} archetypes, {cohort.missing_count} missing cells, seed {spec.seed})"
    )
    return cohort
