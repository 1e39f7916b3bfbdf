"""
GLSTM Pipeline

Training and testing for generative boosting with LSTMs:

1. train the next-step generator on G, tune on validation windows
2. generate g synthetic steps for the P, validation and test windows (window surgery)
3. train one predictor per reported horizon h > g on the augmented P windows,
   tune on augmented validation windows
4. score the predictors on augmented test windows in original units; the
   generator's own test scores at horizons 1..g are kept as diagnostics

With an MI selection, G'/P' from micluster replace G/P.
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Iterator, Optional

from vitalcast.core.errors import StageError
from vitalcast.core.numerics import Rng
from vitalcast.forecasters.base import Forecaster
from vitalcast.models.experiment_model import ExperimentConfig
from vitalcast.models.forecast_model import StrategyPlan
from vitalcast.models.report_model import MetricsReport
from vitalcast.services.experiment_data import SeedData, generative_fraction
from vitalcast.services.metrics import MethodOutcome, build_report, score_scaled
from vitalcast.services.micluster import GroupAssignment, MiScoreTable, group_and_sample, score_cohort
from vitalcast.services.strategies import augment_windows, clean_augment, direct_predict_batch
from vitalcast.services.tuning import tune_lstm

logger = logging.getLogger(__name__)


@contextmanager
def stage(label: str) -> Iterator[None]:
    """Re-raise any failure inside the block as StageError(label, cause)."""
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        logger.error(f"[PIPELINE] ❌ {label}: {type(exc).__name__}: {exc}")
        raise StageError(label, exc) from exc


@dataclass(frozen=True, eq=False)
class GlstmResult:
    method: str
    depth: int
    generator: Forecaster
    predictors: Dict[int, Forecaster]
    outcome: MethodOutcome
    report: MetricsReport


def train_generator(data: SeedData, generative, config: ExperimentConfig, rng: Rng) -> Forecaster:
    """Next-step 5-vital LSTM trained on the generative windows."""
    tuned = tune_lstm(
        generative.windows,
        generative.next_step(),
        data.validation.windows,
        data.validation.next_step(),
        config.generator,
        config.tuning,
        rng,
        tag="GENERATOR",
    )
    logger.info(f"[PIPELINE] ✓ Generator trained on {generative.S} windows (val mse {tuned.val_mse:.6f})")
    return tuned.forecaster


def score_training_patients(data: SeedData, config: ExperimentConfig, rng: Rng) -> MiScoreTable:
    """J scores of the training patients, computed on scaled vitals."""
    return score_cohort(
        data.scaled_cohort(data.split.train),
        k=config.micluster.k,
        jitter=config.micluster.jitter,
        rng=rng.substream("jitter"),
        theiler=config.micluster.theiler_window,
    )


def select_mi_subsets(data: SeedData, config: ExperimentConfig, rng: Rng) -> GroupAssignment:
    """G'/P' from MI scores over the training patients."""
    table = score_training_patients(data, config, rng)
    return group_and_sample(table, config.micluster.groups, generative_fraction(config.splits), rng.substream("sample"))


def run_glstm_pipeline(
    data: SeedData,
    depth: int,
    config: ExperimentConfig,
    rng: Rng,
    generator: Optional[Forecaster] = None,
    selection: Optional[GroupAssignment] = None,
    generator_rng: Optional[Rng] = None,
) -> GlstmResult:
    """
    Args:
        generator: reuse an already trained generator (shared by G1/G2/G3)
        selection: MI-based G'/P'; None uses the random G/P split
        generator_rng: stream for generator training, defaults to rng.substream("generator")
    """
    method = f"glstm-g{depth}" + ("-mi" if selection is not None else "")
    plan = StrategyPlan(
        kind="generative_boosting",
        generative_depth=depth,
        horizons=list(data.horizons),
        target_vital=data.test.target_vital,
    )
    ti = data.target_index

    with stage(f"{method} data"):
        generative = data.generative if selection is None else data.windows_for(selection.generative)
        predictive = data.predictive if selection is None else data.windows_for(selection.predictive)

    if generator is None:
        with stage(f"{method} generator"):
            generator = train_generator(data, generative, config, generator_rng or rng.substream("generator"))

    with stage(f"{method} augmentation"):
        test_windows, test_generated = augment_windows(generator, data.test.windows, depth)
        if config.predictors_on_generated_windows:
            train_windows, _ = augment_windows(generator, predictive.windows, depth)
            val_windows, _ = augment_windows(generator, data.validation.windows, depth)
        else:
            train_windows = clean_augment(predictive, depth)
            val_windows = clean_augment(data.validation, depth)

    predictors: Dict[int, Forecaster] = {}
    for h in plan.reported_horizons:
        with stage(f"{method} predictor h={h}"):
            tuned = tune_lstm(
                train_windows,
                predictive.target(h),
                val_windows,
                data.validation.target(h),
                config.predictor,
                config.tuning,
                rng.substream("predictor", h),
                tag=f"GLSTM-G{depth}",
            )
            predictors[h] = tuned.forecaster

    with stage(f"{method} evaluation"):
        predictions = direct_predict_batch(predictors, test_windows, plan.reported_horizons)
        metrics = {
            h: score_scaled(predictions[h], data.test.target_raw(h), data.scaler, ti) for h in plan.reported_horizons
        }
        generated = {
            h: score_scaled(test_generated[:, h - 1, ti], data.test.target_raw(h), data.scaler, ti)
            for h in plan.generated_horizons
        }

    outcome = MethodOutcome(metrics=metrics, generated=generated)
    report = build_report(
        data.test.target_vital, plan.horizons, [data.seed], [method], {method: depth}, [{method: outcome}]
    )
    logger.info(f"[PIPELINE] ✓ {method} seed={data.seed}: {len(predictors)} predictors evaluated on {data.test.S} windows")
    return GlstmResult(method, depth, generator, predictors, outcome, report)
