"""
Per-seed Experiment Data

Split, scaler and window sets shared by every method of one seed.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from vitalcast.models.dataset_model import CohortSplit, SplitPlan, WindowedDataset
from vitalcast.models.experiment_model import ExperimentConfig
from vitalcast.models.patient_model import Cohort
from vitalcast.services.preprocessing import MinMaxScaler, check_no_leakage, fit_scaler
from vitalcast.services.splits import split_patients
from vitalcast.services.windowing import make_windows

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SeedData:
    seed: int
    split: CohortSplit
    scaler: MinMaxScaler
    cohort: Cohort  # imputed, original units
    train: WindowedDataset
    predictive: WindowedDataset
    generative: WindowedDataset
    validation: WindowedDataset
    test: WindowedDataset
    horizons: Tuple[int, ...]

    @property
    def target_index(self) -> int:
        return self.test.target_index

    def windows_for(self, patient_ids) -> WindowedDataset:
        return self.window(self.cohort.subset(patient_ids))

    def window(self, cohort: Cohort) -> WindowedDataset:
        return make_windows(cohort, self.test.M, range(1, self.test.h_max + 1), self.test.target_vital, self.scaler)

    def scaled_cohort(self, patient_ids) -> Cohort:
        """Records whose vitals are in model units (for MI scoring)."""
        subset = self.cohort.subset(patient_ids)
        return subset.map(lambda r: r.with_vitals(self.scaler.scale_record(r)[:, : r.vitals.shape[1]]))


def split_plan_for(config: ExperimentConfig, seed: int) -> SplitPlan:
    if config.hold_splits_fixed:
        return config.splits
    return config.splits.model_copy(update={"seed": seed})


def generative_fraction(plan: SplitPlan) -> Fraction:
    """Share of the training patients that trains the generator."""
    return Fraction(str(plan.generative)) / Fraction(str(plan.train))


def prepare_seed_data(config: ExperimentConfig, cohort: Cohort, seed: int) -> SeedData:
    """Split patients, fit the scaler on the training share and window every subset up to max(horizons)."""
    split = split_patients(cohort, split_plan_for(config, seed))
    scaler = fit_scaler(cohort.subset(split.train), fitted_on="train")
    check_no_leakage(scaler, split.validation + split.test)

    all_steps = range(1, max(config.horizons) + 1)

    def window(ids):
        return make_windows(cohort.subset(ids), config.window_length, all_steps, config.target_vital, scaler)

    data = SeedData(
        seed=seed,
        split=split,
        scaler=scaler,
        cohort=cohort,
        train=window(split.train),
        predictive=window(split.predictive),
        generative=window(split.generative),
        validation=window(split.validation),
        test=window(split.test),
        horizons=tuple(config.horizons),
    )
    for name in ("train", "validation", "test"):
        if getattr(data, name).S == 0:
            logger.warning(f"[SUITE] ⚠️ seed {seed}: {name} split has no windows (patients too short)")
    return data
