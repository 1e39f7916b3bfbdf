"""
Synthetic Cohort Tests
"""

import numpy as np
import pytest
from pydantic import ValidationError

from vitalcast.core.numerics import Rng
from vitalcast.models.patient_model import N_VITALS, PHYSIOLOGICAL_RANGES, VITALS
from vitalcast.models.synth_model import CohortSpec
from vitalcast.services.micluster import patient_mi
from vitalcast.services.preprocessing import fit_scaler
from vitalcast.services.synthgen import ar2_series, generate_cohort


class TestGenerateCohort:
    """Test reproducible cohort generation"""

    def test_shape_and_ids(self, small_cohort, cohort_spec):
        assert len(small_cohort) == cohort_spec.n_patients
        assert small_cohort.ids[0] == "P001"
        assert all(r.p == cohort_spec.steps_per_patient for r in small_cohort)

    def test_same_spec_same_values(self, cohort_spec):
        a = generate_cohort(cohort_spec)
        b = generate_cohort(cohort_spec)
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.vitals, rb.vitals)
            assert (ra.age, ra.gender) == (rb.age, rb.gender)

    def test_seed_changes_values(self, cohort_spec):
        a = generate_cohort(cohort_spec)
        b = generate_cohort(cohort_spec.model_copy(update={"seed": cohort_spec.seed + 1}))
        assert not np.array_equal(a.records[0].vitals, b.records[0].vitals)

    def test_values_within_physiological_ranges(self, small_cohort):
        for record in small_cohort:
            for j, vital in enumerate(VITALS):
                low, high = PHYSIOLOGICAL_RANGES[vital]
                assert record.vitals[:, j].min() >= low
                assert record.vitals[:, j].max() <= high

    def test_archetypes_round_robin(self, small_cohort):
        assert [small_cohort.archetypes[pid] for pid in small_cohort.ids] == [0, 1, 0, 1, 0, 1, 0, 1]

    def test_missing_rate_roughly_respected(self, cohort_spec):
        cohort = generate_cohort(cohort_spec.model_copy(update={"missing_rate": 0.05, "n_patients": 20}))
        total = 20 * cohort_spec.steps_per_patient * len(VITALS)
        assert 0.02 < cohort.missing_count / total < 0.08

    def test_every_column_keeps_an_observation(self, cohort_spec):
        spec = cohort_spec.model_copy(update={"missing_rate": 0.09})
        for record in generate_cohort(spec):
            assert np.all((~record.missing_mask).any(axis=0))

    def test_same_archetype_patients_correlate_more(self):
        """Shared latent stream makes same-archetype heart rates co-move"""
        spec = CohortSpec(n_patients=6, steps_per_patient=400, n_archetypes=2, seed=2)
        cohort = generate_cohort(spec)
        hr = {r.patient_id: r.vitals[:, 0] for r in cohort}
        same = np.corrcoef(hr["P001"], hr["P003"])[0, 1]
        other = np.corrcoef(hr["P001"], hr["P002"])[0, 1]
        assert same > other

    def test_mi_separates_archetypes(self):
        """Same-archetype pairs share information; cross-archetype pairs are near independent"""
        cohort = generate_cohort(CohortSpec(n_patients=12, steps_per_patient=288, n_archetypes=3, seed=0))
        scaler = fit_scaler(cohort, fitted_on="cohort")
        scaled = {r.patient_id: r.with_vitals(scaler.scale_record(r)[:, :N_VITALS]) for r in cohort}
        ids = cohort.ids
        same = [patient_mi(scaled[ids[i]], scaled[ids[i + 3]]) for i in (0, 1, 2, 6, 7, 8)]
        cross = [patient_mi(scaled[ids[i]], scaled[ids[i + 1]]) for i in (0, 1, 3, 4, 6, 9)]
        assert np.mean(cross) < 0.1
        assert np.mean(same) > np.mean(cross) + 0.1

    def test_adding_patients_keeps_earlier_ones(self, cohort_spec):
        """Patient streams are keyed by index, not draw order"""
        small = generate_cohort(cohort_spec)
        large = generate_cohort(cohort_spec.model_copy(update={"n_patients": 10}))
        np.testing.assert_array_equal(small.records[3].vitals, large.records[3].vitals)


class TestCohortSpec:
    def test_too_many_archetypes(self):
        with pytest.raises(ValidationError):
            CohortSpec(n_patients=2, n_archetypes=3)

    def test_series_too_short_for_windows(self):
        with pytest.raises(ValidationError):
            CohortSpec(n_patients=4, steps_per_patient=30, window_length=20, max_horizon=12)

    def test_missing_rate_bound(self):
        with pytest.raises(ValidationError):
            CohortSpec(n_patients=4, missing_rate=0.1)


class TestAr2:
    def test_unit_variance(self):
        series = ar2_series(Rng(0), 20000)
        assert abs(series.var() - 1.0) < 0.15
        assert abs(series.mean()) < 0.2
