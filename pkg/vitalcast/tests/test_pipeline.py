"""
Pipeline Tests

Per-seed runs, suite aggregation, MI selection and the worker pool on a tiny
synthetic experiment.
"""

import pytest

from vitalcast.core.errors import StageError
from vitalcast.core.numerics import Rng
from vitalcast.services import evaluation
from vitalcast.services.evaluation import run_seed, run_suite
from vitalcast.services.experiment_data import prepare_seed_data
from vitalcast.services.pipeline import select_mi_subsets, stage
from vitalcast.services.preprocessing import impute_cohort
from vitalcast.services.report_service import report_service
from vitalcast.services.synthgen import generate_cohort
from vitalcast.tasks.worker_pool import run_ordered


@pytest.fixture
def fast_cohort(fast_config):
    """Imputed cohort described by the fast config"""
    return impute_cohort(generate_cohort(fast_config.data.synthetic))


class TestRunSeed:
    """Test one seed of every method"""

    def test_outcomes_cover_every_method(self, fast_config, fast_cohort):
        outcomes = run_seed(fast_config, fast_cohort, 0)
        assert list(outcomes) == fast_config.methods
        assert sorted(outcomes["arima"].metrics) == [1, 2, 3]
        assert outcomes["arima"].generated == {}
        assert sorted(outcomes["glstm-g1"].metrics) == [2, 3]
        assert sorted(outcomes["glstm-g1"].generated) == [1]
        for outcome in outcomes.values():
            assert all(v.mse >= 0 and v.mape >= 0 for v in outcome.metrics.values())

    def test_failures_name_method_and_seed(self, fast_config, fast_cohort, monkeypatch):
        def explode(name, data, config, rng):
            raise RuntimeError("boom")

        monkeypatch.setattr(evaluation, "run_benchmark", explode)
        with pytest.raises(StageError) as exc_info:
            run_seed(fast_config, fast_cohort, 1)
        assert exc_info.value.stage == "krr seed=1"
        assert isinstance(exc_info.value.cause, RuntimeError)


class TestRunSuite:
    """Test seed aggregation"""

    def test_report_shape(self, fast_config, fast_cohort):
        report = run_suite(fast_config, fast_cohort)
        assert report.n_runs == 2
        assert report.seeds == [0, 1]
        assert report.cell("glstm-g1", 1).blank
        assert report.cell("glstm-g1-mi", 1).blank
        assert not report.cell("glstm-g1", 2).blank
        assert all(len(c.per_seed_mse) == 2 for c in report.cells if not c.blank)
        assert "glstm-g1" in report.generative_diagnostics

    def test_same_config_same_report(self, fast_config, fast_cohort):
        narrow = fast_config.model_copy(update={"methods": ["arima", "lstm-direct", "glstm-g1-mi"]})
        first = report_service.render_json(run_suite(narrow, fast_cohort))
        second = report_service.render_json(run_suite(narrow, fast_cohort))
        assert first == second


class TestMiSelection:
    def test_subsets_partition_training_patients(self, fast_config, fast_cohort):
        data = prepare_seed_data(fast_config, fast_cohort, 0)
        selection = select_mi_subsets(data, fast_config, Rng(0).substream("mi"))
        train = set(data.split.train)
        assert set(selection.generative) | set(selection.predictive) == train
        assert not set(selection.generative) & set(selection.predictive)
        assert len(selection.generative) == 2
        assert len(selection.groups) == fast_config.micluster.groups


class TestStage:
    def test_wraps_with_label(self):
        with pytest.raises(StageError) as exc_info:
            with stage("unit"):
                raise ValueError("bad")
        assert exc_info.value.stage == "unit"

    def test_keeps_inner_stage(self):
        with pytest.raises(StageError) as exc_info:
            with stage("outer"):
                with stage("inner"):
                    raise ValueError("bad")
        assert exc_info.value.stage == "inner"


class TestWorkerPool:
    """Test ordered parallel execution"""

    def test_inline_order(self):
        assert run_ordered(abs, [-3, 1, -2], max_workers=1) == [3, 1, 2]

    def test_process_pool_keeps_input_order(self):
        assert run_ordered(abs, list(range(-8, 0)), max_workers=3) == list(range(8, 0, -1))

    def test_first_failure_reraised(self):
        with pytest.raises(ValueError):
            run_ordered(int, ["1", "x", "2"], max_workers=1)
