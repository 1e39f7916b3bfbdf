"""
mi-report: score patients by mutual information, group them and sample G'

By default every patient of the cohort is scored (scaled with a scaler fitted on
the whole cohort). With --train-only the seed's training share is scored exactly
as the experiment does, giving the G' membership GLSTM-Gg-MI trains on.
"""

import argparse
import logging
from fractions import Fraction

from vitalcast.cli.common import apply_overrides, load_cohort, non_negative_int
from vitalcast.core.numerics import Rng
from vitalcast.models.experiment_model import load_experiment_config
from vitalcast.services.experiment_data import generative_fraction, prepare_seed_data
from vitalcast.services.micluster import export_mi_csv, group_and_sample, score_cohort
from vitalcast.services.pipeline import score_training_patients
from vitalcast.services.preprocessing import fit_scaler, impute_cohort

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("mi-report", help="Write the MI score table with groups and G' membership")
    parser.add_argument("config", help="Experiment JSON config")
    parser.add_argument("--seed", type=non_negative_int, help="Seed for sampling (default: first config seed)")
    parser.add_argument("--train-only", action="store_true", help="Score only the seed's training patients")
    parser.add_argument("-o", "--output", required=True, help="Output CSV path")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    seed = config.seeds[0] if args.seed is None else args.seed
    config = apply_overrides(config, seeds=[seed])
    cohort = impute_cohort(load_cohort(config.data))
    rng = Rng(seed).substream("mi")
    fraction: Fraction = generative_fraction(config.splits)

    if args.train_only:
        data = prepare_seed_data(config, cohort, seed)
        table = score_training_patients(data, config, rng)
    else:
        scaler = fit_scaler(cohort, fitted_on="cohort")
        scaled = cohort.map(lambda r: r.with_vitals(scaler.scale_record(r)[:, : r.vitals.shape[1]]))
        table = score_cohort(
            scaled,
            k=config.micluster.k,
            jitter=config.micluster.jitter,
            rng=rng.substream("jitter"),
            theiler=config.micluster.theiler_window,
        )

    assignment = group_and_sample(table, config.micluster.groups, fraction, rng.substream("sample"))
    export_mi_csv(table, assignment, args.output)
    print(f"patients: {len(table.patient_ids)}, groups: {len(assignment.groups)}, |G'|: {len(assignment.generative)}")
    print(f"written: {args.output}")
    return 0
