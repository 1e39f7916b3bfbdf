"""
Unit Tests for Metrics and Reports

Hand-computed MSE/MAPE, run averaging and every report renderer.
"""

import json

import numpy as np
import pytest
from pydantic import ValidationError

from vitalcast.core.errors import ContractViolation
from vitalcast.models.experiment_model import OutputConfig
from vitalcast.models.report_model import MetricCell, MetricsReport
from vitalcast.services.metrics import (
    MethodOutcome,
    MetricValue,
    build_report,
    compare_per_seed,
    mape,
    mape_with_exclusions,
    mse,
    score_scaled,
)
from vitalcast.services.preprocessing import fit_scaler
from vitalcast.services.report_service import CSV_HEADER, ReportService, display_name, write_reports


@pytest.fixture
def two_seed_report():
    """ARIMA plus GLSTM-G1 over two seeds, horizons 1-2"""
    runs = [
        {
            "arima": MethodOutcome({1: MetricValue(1.0, 10.0), 2: MetricValue(2.0, 20.0)}),
            "glstm-g1": MethodOutcome({2: MetricValue(1.5, 12.0)}, {1: MetricValue(0.5, 5.0)}),
        },
        {
            "arima": MethodOutcome({1: MetricValue(3.0, 30.0), 2: MetricValue(4.0, 40.0)}),
            "glstm-g1": MethodOutcome({2: MetricValue(2.5, 14.0, 1)}, {1: MetricValue(1.5, 7.0)}),
        },
    ]
    return build_report("heart_rate", [1, 2], [0, 1], ["arima", "glstm-g1"], {"glstm-g1": 1}, runs)


@pytest.fixture
def service():
    return ReportService(decimals=4)


class TestMetrics:
    """Test MSE and MAPE"""

    def test_mse_by_hand(self):
        assert mse([1.0, 2.0, 3.0], [1.0, 2.0, 5.0]) == pytest.approx(4.0 / 3.0)

    def test_mape_by_hand(self):
        assert mape([110.0, 90.0], [100.0, 100.0]) == pytest.approx(10.0)

    def test_mape_skips_zero_actuals(self):
        value, excluded = mape_with_exclusions([1.0, 110.0], [0.0, 100.0])
        assert value == pytest.approx(10.0)
        assert excluded == 1

    def test_all_actuals_zero(self):
        with pytest.raises(ContractViolation):
            mape([1.0, 2.0], [0.0, 1e-9])

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            mse([1.0], [1.0, 2.0])
        with pytest.raises(ContractViolation):
            mse([], [])

    def test_scores_in_original_units(self, hand_cohort):
        scaler = fit_scaler(hand_cohort)
        low, high = scaler.mins[0], scaler.maxs[0]
        value = score_scaled(np.array([0.0, 1.0]), np.array([low, high + 2.0]), scaler, 0)
        assert value.mse == pytest.approx(2.0)
        assert value.mape == pytest.approx(50.0 * 2.0 / (high + 2.0))


class TestBuildReport:
    """Test averaging over seeds"""

    def test_mean_and_population_std(self, two_seed_report):
        cell = two_seed_report.cell("arima", 1)
        assert (cell.mse, cell.mape) == (2.0, 20.0)
        assert cell.mse_std == pytest.approx(1.0)
        assert cell.per_seed_mse == [1.0, 3.0]
        assert two_seed_report.n_runs == 2

    def test_generated_horizons_blank(self, two_seed_report):
        cell = two_seed_report.cell("glstm-g1", 1)
        assert cell.blank and cell.generated
        assert two_seed_report.generated_horizons == {"arima": [], "glstm-g1": [1]}
        assert two_seed_report.leading_blanks("glstm-g1") == 1
        assert two_seed_report.leading_blanks("arima") == 0

    def test_generator_scores_kept_as_diagnostics(self, two_seed_report):
        assert two_seed_report.generative_diagnostics == {"glstm-g1": {1: {"mse": 1.0, "mape": 6.0}}}

    def test_exclusions_summed(self, two_seed_report):
        assert two_seed_report.cell("glstm-g1", 2).mape_excluded == 1

    def test_best_cells(self, two_seed_report):
        assert two_seed_report.best_cells() == {
            (1, "mse"): "arima",
            (1, "mape"): "arima",
            (2, "mse"): "glstm-g1",
            (2, "mape"): "glstm-g1",
        }

    def test_ties_go_to_earlier_method(self):
        cells = [MetricCell(method=m, horizon=1, mse=1.0, mape=2.0) for m in ("b", "a")]
        report = MetricsReport(target_vital="sbp", horizons=[1], methods=["b", "a"], cells=cells)
        assert report.best_cells()[(1, "mse")] == "b"

    def test_per_seed_comparison(self, two_seed_report):
        comparison = compare_per_seed(two_seed_report, "glstm-g1", "arima", 2)
        assert (comparison.wins, comparison.runs) == (2, 2)
        assert comparison.holds(2)
        assert compare_per_seed(two_seed_report, "arima", "glstm-g1", 2).wins == 0

    def test_per_seed_ties_count_as_wins(self):
        cells = [
            MetricCell(method="a", horizon=4, mse=1.3, mape=1.0, per_seed_mse=[1.0, 2.5, 0.4]),
            MetricCell(method="b", horizon=4, mse=1.17, mape=1.0, per_seed_mse=[1.0, 2.0, 0.5]),
        ]
        report = MetricsReport(target_vital="sbp", horizons=[4], methods=["a", "b"], cells=cells)
        comparison = compare_per_seed(report, "a", "b", 4)
        assert comparison.wins == 2
        assert not comparison.holds(3)

    def test_per_seed_comparison_needs_reported_cells(self, two_seed_report):
        with pytest.raises(ContractViolation):
            compare_per_seed(two_seed_report, "glstm-g1", "arima", 1)

    def test_missing_cell(self, two_seed_report):
        with pytest.raises(KeyError):
            two_seed_report.cell("gpr", 1)

    def test_negative_metric_rejected(self):
        with pytest.raises(ValidationError):
            MetricCell(method="arima", horizon=1, mse=-1.0)


class TestReportService:
    """Test report rendering"""

    def test_csv(self, service, two_seed_report):
        assert service.render_csv(two_seed_report).decode() == (
            f"{CSV_HEADER}\n"
            "arima,1,2.000000,20.000000,2\n"
            "arima,2,3.000000,30.000000,2\n"
            "glstm-g1,1,,,2\n"
            "glstm-g1,2,2.000000,13.000000,2\n"
        )

    def test_markdown(self, service, two_seed_report):
        assert service.render_markdown(two_seed_report).decode().splitlines() == [
            "| Method | t+1 MSE | t+1 MAPE | t+2 MSE | t+2 MAPE |",
            "|---|---:|---:|---:|---:|",
            "| ARIMA | **2.0000** | **20.0000** | 3.0000 | 30.0000 |",
            "| GLSTM-G1 | -- | -- | **2.0000** | **13.0000** |",
        ]

    def test_empty_report_is_header_only(self, service):
        empty = MetricsReport(target_vital="heart_rate")
        assert service.render_csv(empty) == (CSV_HEADER + "\n").encode()
        assert service.render_markdown(empty).decode().splitlines() == ["| Method |", "|---|"]

    def test_json_round_trips_through_the_model(self, service, two_seed_report):
        text = service.render_json(two_seed_report).decode()
        assert text.endswith("}\n")
        assert MetricsReport.model_validate(json.loads(text)) == two_seed_report

    def test_pdf_is_deterministic(self, service, two_seed_report):
        first = service.render_pdf(two_seed_report)
        assert first.startswith(b"%PDF")
        assert first == service.render_pdf(two_seed_report)

    def test_unknown_format(self, service, two_seed_report):
        with pytest.raises(ContractViolation):
            service.render(two_seed_report, "xlsx")

    def test_display_names(self):
        assert display_name("krr", {"krr": "SVR substitute"}) == "KRR (SVR substitute)"
        assert display_name("lstm-direct") == "LSTM (direct)"
        assert display_name("glstm-g2-mi") == "GLSTM-G2-MI"

    def test_write_reports(self, tmp_path, two_seed_report):
        output = OutputConfig(directory=str(tmp_path / "out"), basename="hr", formats=["csv", "json"])
        written = write_reports(two_seed_report, output)
        assert [p.name for p in written] == ["hr.csv", "hr.json"]
        assert all(p.read_bytes().endswith(b"\n") for p in written)
