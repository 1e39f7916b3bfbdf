"""
Pytest Configuration and Fixtures

Shared fixtures for vitalcast tests: small synthetic cohorts, hand-built
records and a fast experiment config.
"""

import numpy as np
import pytest

from vitalcast.core.cache import clear_mi_cache
from vitalcast.forecasters.base import Forecaster
from vitalcast.models.experiment_model import parse_experiment_config
from vitalcast.models.patient_model import N_VITALS, Cohort, PatientRecord
from vitalcast.models.synth_model import CohortSpec
from vitalcast.services.synthgen import generate_cohort


class ConstantForecaster(Forecaster):
    """Returns the same output for every window"""

    kind = "stub"

    def __init__(self, values):
        self.values = np.atleast_1d(np.asarray(values, dtype=np.float64))

    @property
    def output_dim(self) -> int:
        return self.values.size

    def predict_batch(self, windows):
        windows = np.asarray(windows)
        return np.tile(self.values, (windows.shape[0], 1))


class OracleSeries:
    """
    Ground truth for oracle tests: one vector of the five vitals per absolute
    time index; column 0 of every window row stores that index (as a float).
    """

    def __init__(self, length: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.vitals = rng.normal(size=(length, N_VITALS))
        self.vitals[:, 0] = np.arange(length, dtype=np.float64)

    def window(self, end: int, m: int) -> np.ndarray:
        rows = self.vitals[end - m + 1 : end + 1]
        statics = np.tile([0.4, 1.0], (m, 1))
        return np.hstack([rows, statics])


class OracleGenerator(Forecaster):
    """Emits the true next step of an OracleSeries."""

    kind = "oracle"

    def __init__(self, series: OracleSeries):
        self.series = series

    @property
    def output_dim(self) -> int:
        return N_VITALS

    def predict_batch(self, windows):
        last = np.asarray(windows)[:, -1, 0].astype(int)
        return self.series.vitals[last + 1]


class OracleDirect(Forecaster):
    """Emits the true target vital `steps` ahead of the window end."""

    kind = "oracle"

    def __init__(self, series: OracleSeries, steps: int, target_index: int):
        self.series = series
        self.steps = steps
        self.target_index = target_index

    @property
    def output_dim(self) -> int:
        return 1

    def predict_batch(self, windows):
        last = np.asarray(windows)[:, -1, 0].astype(int)
        return self.series.vitals[last + self.steps, self.target_index][:, None]


@pytest.fixture(autouse=True)
def fresh_mi_cache():
    """Every test starts from an empty MI cache"""
    clear_mi_cache()
    yield
    clear_mi_cache()


@pytest.fixture
def cohort_spec():
    """Small synthetic cohort spec"""
    return CohortSpec(
        n_patients=8,
        steps_per_patient=60,
        n_archetypes=2,
        missing_rate=0.0,
        seed=11,
        window_length=10,
        max_horizon=3,
    )


@pytest.fixture
def small_cohort(cohort_spec):
    """8 complete patients x 60 steps"""
    return generate_cohort(cohort_spec)


@pytest.fixture
def gappy_cohort(cohort_spec):
    """Same shape with 5% missing cells"""
    return generate_cohort(cohort_spec.model_copy(update={"missing_rate": 0.05}))


@pytest.fixture
def make_record():
    """Factory for hand-built patient records"""

    def _make(patient_id="A", p=30, age=60.0, gender=1, seed=0, vitals=None):
        if vitals is None:
            rng = np.random.default_rng(seed)
            base = np.array([80.0, 18.0, 96.0, 37.0, 120.0])
            vitals = base + rng.normal(size=(p, N_VITALS)) * np.array([5.0, 2.0, 1.0, 0.2, 8.0])
        return PatientRecord(patient_id=patient_id, age=age, gender=gender, vitals=np.asarray(vitals, dtype=float))

    return _make


@pytest.fixture
def hand_cohort(make_record):
    """Six hand-built complete patients"""
    return Cohort(tuple(make_record(f"H{i}", p=40, age=40.0 + i, gender=i % 2, seed=i) for i in range(6)))


@pytest.fixture
def fast_config_payload():
    """Experiment document small enough to run every method in seconds"""
    return {
        "data": {
            "synthetic": {
                "n_patients": 10,
                "steps_per_patient": 40,
                "n_archetypes": 2,
                "seed": 5,
                "window_length": 8,
                "max_horizon": 3,
            }
        },
        "target_vital": "heart_rate",
        "horizons": [1, 2, 3],
        "seeds": [0, 1],
        "methods": ["krr", "arima", "mlp", "lstm-direct", "glstm-g1", "glstm-g1-mi"],
        "window_length": 20,
        "generator": {"epochs": 2},
        "predictor": {"epochs": 2},
        "mlp": {"epochs": 2, "hidden_layers": [4, 3]},
        "kernel": {
            "max_train_points": 60,
            "length_scale_factors": [1.0],
            "krr_alphas": [0.1],
            "gpr_signal_scales": [1.0],
            "gpr_noise_levels": [0.1],
        },
        "micluster": {"groups": 2},
        "output": {"directory": "reports", "basename": "fast", "formats": ["csv", "markdown", "json"]},
    }


@pytest.fixture
def fast_config(fast_config_payload):
    return parse_experiment_config(fast_config_payload)
