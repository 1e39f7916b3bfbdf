"""
Unit Tests for the Data Layer

CSV ingestion, imputation, scaling, windowing and patient-level splits.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitalcast.core.errors import (
    CheckpointError,
    ContractViolation,
    CsvContractError,
    ImputationError,
    LeakageError,
    SplitError,
)
from vitalcast.models.dataset_model import SplitPlan, load_windowed_binary
from vitalcast.models.patient_model import Cohort, PatientRecord
from vitalcast.services.ingest import ingest_csv, validate_csv, write_cohort_csv
from vitalcast.services.preprocessing import check_no_leakage, fit_scaler, impute_cohort, impute_locf
from vitalcast.services.splits import largest_remainder, split_patients
from vitalcast.services.windowing import latest_window, make_windows, window_count

HEADER = "patient_id,timestamp,age,gender,heart_rate,resp_rate,spo2,temp,sbp\n"


def _row(pid, minute, hr="80", age="60", gender="1"):
    return f"{pid},2024-01-01T00:{minute:02d}:00,{age},{gender},{hr},18,97,37.0,120\n"


@pytest.fixture
def csv_path(tmp_path):
    """Writes CSV text to a temp file"""

    def _write(text, name="cohort.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


class TestIngest:
    """Test the patient CSV contract"""

    def test_valid_file(self, csv_path):
        text = HEADER + _row("A", 0) + _row("A", 5, hr="82") + _row("B", 0, gender="0") + _row("B", 5, gender="0")
        cohort = ingest_csv(csv_path(text))
        assert cohort.ids == ("A", "B")
        assert cohort.by_id("A").p == 2
        assert cohort.by_id("A").vitals[1, 0] == 82.0
        assert cohort.by_id("B").gender == 0

    def test_empty_cells_are_missing(self, csv_path):
        text = HEADER + _row("A", 0) + _row("A", 5, hr="")
        record = ingest_csv(csv_path(text)).by_id("A")
        assert np.isnan(record.vitals[1, 0])
        assert record.missing_count == 1

    def test_grid_gap_materialised(self, csv_path):
        text = HEADER + _row("A", 0) + _row("A", 15)
        record = ingest_csv(csv_path(text)).by_id("A")
        assert record.p == 4
        assert np.all(np.isnan(record.vitals[1:3]))

    def test_rows_sorted_by_timestamp(self, csv_path):
        text = HEADER + _row("A", 5, hr="90") + _row("A", 0, hr="70")
        record = ingest_csv(csv_path(text)).by_id("A")
        assert record.vitals[:, 0].tolist() == [70.0, 90.0]

    def test_duplicate_timestamp_cites_line(self, csv_path):
        text = HEADER + _row("A", 0) + _row("A", 5) + _row("A", 5)
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(text))
        lines = [line for line, _ in exc_info.value.issues]
        assert lines == [4]
        assert "first seen on line 3" in exc_info.value.issues[0][1]

    def test_non_numeric_vital(self, csv_path):
        text = HEADER + _row("A", 0, hr="fast")
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(text))
        assert exc_info.value.issues == [(2, "non-numeric value in column heart_rate")]

    def test_bad_gender(self, csv_path):
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(HEADER + _row("A", 0, gender="2")))
        assert (2, "gender must be 0 or 1") in exc_info.value.issues

    def test_unknown_column(self, csv_path):
        text = HEADER.strip() + ",notes\n" + _row("A", 0).strip() + ",x\n"
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(text))
        assert exc_info.value.issues[0][0] == 1

    def test_off_grid_timestamp(self, csv_path):
        text = HEADER + _row("A", 0) + _row("A", 7)
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(text))
        assert exc_info.value.issues == [(3, "timestamp is not on the 5-minute grid")]

    def test_conflicting_age(self, csv_path):
        text = HEADER + _row("A", 0, age="60") + _row("A", 5, age="61")
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(text))
        assert exc_info.value.issues == [(3, "conflicting age for patient A")]

    def test_invalid_timestamp(self, csv_path):
        text = HEADER + "A,yesterday,60,1,80,18,97,37,120\n"
        with pytest.raises(CsvContractError) as exc_info:
            ingest_csv(csv_path(text))
        assert (2, "invalid timestamp") in exc_info.value.issues

    def test_empty_file(self, csv_path):
        with pytest.raises(CsvContractError):
            ingest_csv(csv_path(""))

    def test_write_then_read_preserves_values(self, tmp_path, gappy_cohort):
        path = tmp_path / "out.csv"
        write_cohort_csv(gappy_cohort, path)
        loaded = ingest_csv(path)
        assert loaded.ids == gappy_cohort.ids
        for original, parsed in zip(gappy_cohort, loaded):
            np.testing.assert_array_equal(np.isnan(original.vitals), np.isnan(parsed.vitals))
            np.testing.assert_allclose(np.nan_to_num(original.vitals), np.nan_to_num(parsed.vitals))
            assert parsed.age == original.age
            assert parsed.gender == original.gender

    def test_written_file_ends_with_newline(self, tmp_path, small_cohort):
        path = tmp_path / "out.csv"
        write_cohort_csv(small_cohort, path)
        raw = path.read_bytes()
        assert raw.endswith(b"\n")
        assert b"\r\n" not in raw


class TestValidate:
    """Test the ingestion dry run"""

    def test_summary_counts(self, csv_path):
        text = HEADER + _row("A", 0) + _row("A", 5, hr="") + _row("A", 10)
        summary = validate_csv(csv_path(text))
        assert len(summary.patients) == 1
        assert summary.patients[0].p == 3
        assert summary.total_missing == 1
        assert summary.warnings == []

    def test_range_excursion_is_warning(self, csv_path):
        text = HEADER + _row("A", 0, hr="250") + _row("A", 5)
        summary = validate_csv(csv_path(text))
        assert len(summary.warnings) == 1
        assert "heart_rate" in summary.warnings[0]

    def test_unimputable_vital(self, csv_path):
        text = HEADER + _row("A", 0, hr="") + _row("A", 5, hr="")
        with pytest.raises(ImputationError):
            validate_csv(csv_path(text))


class TestImputation:
    """Test LOCF imputation"""

    def test_forward_then_backward_fill(self, make_record):
        vitals = np.full((4, 5), 1.0)
        vitals[:, 0] = [np.nan, 70.0, np.nan, 75.0]
        record = impute_locf(make_record(vitals=vitals))
        assert record.vitals[:, 0].tolist() == [70.0, 70.0, 70.0, 75.0]
        assert record.is_complete

    def test_complete_record_unchanged(self, make_record):
        record = make_record()
        assert impute_locf(record) is record

    def test_all_missing_vital_names_patient(self, make_record):
        vitals = np.ones((3, 5))
        vitals[:, 4] = np.nan
        with pytest.raises(ImputationError, match="sbp"):
            impute_locf(make_record(patient_id="Z9", vitals=vitals))

    def test_cohort_imputation(self, gappy_cohort):
        assert gappy_cohort.missing_count > 0
        assert impute_cohort(gappy_cohort).missing_count == 0


class TestScaler:
    """Test the min-max scaler"""

    def test_training_range_maps_to_unit_interval(self, hand_cohort):
        scaler = fit_scaler(hand_cohort)
        scaled = np.vstack([scaler.scale_record(r) for r in hand_cohort])
        assert scaled.min() >= 0.0 and scaled.max() <= 1.0
        np.testing.assert_allclose(scaled.min(axis=0)[:5], 0.0)
        np.testing.assert_allclose(scaled.max(axis=0)[:5], 1.0)

    def test_invert_round_trip(self, hand_cohort):
        scaler = fit_scaler(hand_cohort)
        features = hand_cohort.by_id("H2").features()
        np.testing.assert_allclose(scaler.invert(scaler.apply(features)), features, atol=1e-9)

    def test_out_of_range_clamped(self, hand_cohort):
        scaler = fit_scaler(hand_cohort)
        values = scaler.maxs + 10.0
        assert np.all(scaler.apply(values) <= 1.0)

    def test_constant_feature_maps_to_half(self, make_record):
        cohort = Cohort((make_record("A", gender=1), make_record("B", gender=1, seed=3)))
        scaler = fit_scaler(cohort)
        assert "gender" in scaler.constant_features
        assert np.all(scaler.scale_record(cohort.by_id("A"))[:, 6] == 0.5)

    def test_requires_imputed_records(self, gappy_cohort):
        with pytest.raises(ContractViolation):
            fit_scaler(gappy_cohort)

    def test_leakage_detected(self, hand_cohort):
        scaler = fit_scaler(hand_cohort.subset(["H0", "H1", "H2"]))
        check_no_leakage(scaler, ["H3", "H4"])
        with pytest.raises(LeakageError):
            check_no_leakage(scaler, ["H4", "H1"])


class TestWindowing:
    """Test sliding-window construction"""

    def test_window_count_formula(self):
        assert window_count(30, 10, 3) == 18
        assert window_count(12, 10, 3) == 0

    def test_shapes_and_targets(self, make_record):
        record = make_record(p=15)
        dataset = make_windows(Cohort((record,)), 5, [1, 3], "heart_rate")
        assert dataset.windows.shape == (8, 5, 7)
        assert dataset.future.shape == (8, 3, 5)
        # window s covers steps s..s+4; t+h is step s+4+h
        np.testing.assert_array_equal(dataset.target(1), record.vitals[5:13, 0])
        np.testing.assert_array_equal(dataset.target(3), record.vitals[7:15, 0])
        np.testing.assert_array_equal(dataset.windows[2], record.features()[2:7])

    def test_short_patient_contributes_nothing(self, make_record):
        cohort = Cohort((make_record("A", p=6), make_record("B", p=20)))
        dataset = make_windows(cohort, 5, [2], "sbp")
        assert set(dataset.patient_ids) == {"B"}
        assert dataset.S == window_count(20, 5, 2)

    def test_no_windows_at_all(self, make_record):
        dataset = make_windows(Cohort((make_record(p=4),)), 5, [1], "heart_rate")
        assert dataset.S == 0
        assert dataset.windows.shape == (0, 5, 7)

    def test_scaled_windows_keep_raw_future(self, hand_cohort):
        scaler = fit_scaler(hand_cohort)
        dataset = make_windows(hand_cohort, 10, [1, 2], "spo2", scaler)
        assert dataset.windows.max() <= 1.0
        np.testing.assert_allclose(scaler.invert_feature(dataset.target(2), 2), dataset.target_raw(2), atol=1e-9)

    def test_requires_imputation(self, gappy_cohort):
        with pytest.raises(ContractViolation):
            make_windows(gappy_cohort, 10, [1], "heart_rate")

    def test_unknown_target(self, hand_cohort):
        with pytest.raises(ContractViolation):
            make_windows(hand_cohort, 10, [1], "glucose")

    def test_latest_window(self, make_record):
        record = make_record(p=12)
        np.testing.assert_array_equal(latest_window(record, 4), record.features()[-4:])
        with pytest.raises(ContractViolation):
            latest_window(record, 13)

    def test_binary_export(self, tmp_path, hand_cohort):
        dataset = make_windows(hand_cohort, 6, [1], "temp")
        path = tmp_path / "windows.bin"
        dataset.export_binary(path)
        np.testing.assert_array_equal(load_windowed_binary(path), dataset.windows)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError):
            load_windowed_binary(path)


class TestSplits:
    """Test patient-level splitting"""

    def test_largest_remainder_ties_go_later(self):
        assert largest_remainder(7, [0.6, 0.2, 0.2]) == [4, 1, 2]
        assert largest_remainder(40, [0.6, 0.2, 0.2]) == [24, 8, 8]

    @given(st.integers(min_value=0, max_value=500), st.lists(st.integers(1, 9), min_size=1, max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_largest_remainder_sums_to_total(self, total, weights):
        seats = largest_remainder(total, weights)
        assert sum(seats) == total
        exact = [total * w / sum(weights) for w in weights]
        assert all(abs(s - q) < 1 for s, q in zip(seats, exact))

    def test_split_partitions_cohort(self, small_cohort):
        split = split_patients(small_cohort, SplitPlan(seed=3))
        everyone = split.train + split.validation + split.test
        assert sorted(everyone) == sorted(small_cohort.ids)
        assert sorted(split.predictive + split.generative) == sorted(split.train)
        assert set(split.predictive).isdisjoint(split.generative)

    def test_split_is_deterministic(self, small_cohort):
        assert split_patients(small_cohort, SplitPlan(seed=4)) == split_patients(small_cohort, SplitPlan(seed=4))

    def test_seed_changes_membership(self, small_cohort):
        splits = {split_patients(small_cohort, SplitPlan(seed=s)).test for s in range(6)}
        assert len(splits) > 1

    def test_too_few_patients(self, make_record):
        cohort = Cohort(tuple(make_record(f"P{i}") for i in range(4)))
        with pytest.raises(SplitError):
            split_patients(cohort, SplitPlan())

    def test_plan_fractions_validated(self):
        with pytest.raises(ValueError):
            SplitPlan(train=0.5, validation=0.2, test=0.2)
        with pytest.raises(ValueError):
            SplitPlan(predictive=0.3, generative=0.2)


class TestRecordContract:
    def test_wrong_vital_width(self):
        with pytest.raises(ContractViolation):
            PatientRecord(patient_id="A", age=50.0, gender=0, vitals=np.zeros((3, 4)))

    def test_duplicate_ids_in_cohort(self, make_record):
        with pytest.raises(ContractViolation):
            Cohort((make_record("A"), make_record("A", seed=2)))
