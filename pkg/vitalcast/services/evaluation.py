"""
Evaluation Service

Runs the configured methods for every seed and averages them into one
MetricsReport. Seeds run through the worker pool; every seed draws from its own
Rng, and aggregation follows the configured seed order, so the report does not
depend on scheduling.
"""

import logging
from functools import partial
from typing import Dict

from vitalcast.core.errors import StageError
from vitalcast.core.numerics import Rng
from vitalcast.models.experiment_model import ExperimentConfig
from vitalcast.models.patient_model import Cohort
from vitalcast.models.report_model import MetricsReport
from vitalcast.services.benchmarks import run_benchmark
from vitalcast.services.experiment_data import prepare_seed_data
from vitalcast.services.metrics import MethodOutcome, build_report
from vitalcast.services.pipeline import run_glstm_pipeline, select_mi_subsets, stage
from vitalcast.services.preprocessing import impute_cohort
from vitalcast.tasks.worker_pool import run_ordered

logger = logging.getLogger(__name__)


def run_seed(config: ExperimentConfig, cohort: Cohort, seed: int) -> Dict[str, MethodOutcome]:
    """All methods for one seed on an imputed cohort. Failures carry the method/seed label."""
    with stage(f"seed={seed} data"):
        data = prepare_seed_data(config, cohort, seed)
    rng = Rng(seed)
    generators = {}
    selection = None
    outcomes: Dict[str, MethodOutcome] = {}

    for spec in config.method_specs:
        label = f"{spec.name} seed={seed}"
        try:
            if spec.family == "glstm":
                key = "mi" if spec.mi_selection else "random"
                if spec.mi_selection and selection is None:
                    with stage(f"{label} mi-selection"):
                        selection = select_mi_subsets(data, config, rng.substream("mi"))
                result = run_glstm_pipeline(
                    data,
                    spec.depth,
                    config,
                    rng.substream("method", spec.name),
                    generator=generators.get(key),
                    selection=selection if spec.mi_selection else None,
                    generator_rng=rng.substream("generator", key),
                )
                generators[key] = result.generator
                outcomes[spec.name] = result.outcome
            else:
                outcomes[spec.name] = run_benchmark(spec.family, data, config, rng.substream("method", spec.name))
        except StageError as exc:
            raise StageError(f"{label} / {exc.stage}", exc.cause) from exc
        except Exception as exc:
            raise StageError(label, exc) from exc
    return outcomes


def _seed_task(config: ExperimentConfig, cohort: Cohort, seed: int) -> Dict[str, MethodOutcome]:
    return run_seed(config, cohort, seed)


def run_suite(config: ExperimentConfig, cohort: Cohort) -> MetricsReport:
    """
    Split, train and evaluate every method for every configured seed.

    Raises:
        StageError: the first failing method/seed; partial results are discarded
    """
    cohort = impute_cohort(cohort)
    logger.info(
        f"[SUITE] 🔄 {len(config.methods)} methods x {len(config.seeds)} seeds on {len(cohort)} patients "
        f"(target {config.target_vital}, horizons {config.horizons})"
    )
    runs = run_ordered(partial(_seed_task, config, cohort), list(config.seeds))
    report = build_report(
        config.target_vital,
        config.horizons,
        config.seeds,
        config.methods,
        {spec.name: spec.depth for spec in config.method_specs},
        runs,
    )
    logger.info(f"[SUITE] ✓ Report ready: {len(report.cells)} cells over {report.n_runs} runs")
    return report
