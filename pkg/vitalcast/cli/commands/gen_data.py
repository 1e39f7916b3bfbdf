"""
gen-data: write a synthetic patient cohort as CSV
"""

import argparse
import logging

from vitalcast.cli.common import non_negative_int, positive_int
from vitalcast.models.synth_model import CohortSpec
from vitalcast.services.ingest import write_cohort_csv
from vitalcast.services.synthgen import generate_cohort

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("gen-data", help="Generate a synthetic vital-sign cohort CSV")
    parser.add_argument("--patients", type=positive_int, required=True, help="Number of patients")
    parser.add_argument("--steps", type=positive_int, default=288, help="Steps per patient (5-minute cadence)")
    parser.add_argument("--archetypes", type=positive_int, default=3, help="Number of latent archetypes")
    parser.add_argument("--missing-rate", type=float, default=0.0, help="Fraction of vital cells left empty (< 0.1)")
    parser.add_argument("--seed", type=non_negative_int, default=0)
    parser.add_argument("-o", "--output", required=True, help="Output CSV path")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    spec = CohortSpec(
        n_patients=args.patients,
        steps_per_patient=args.steps,
        n_archetypes=args.archetypes,
        missing_rate=args.missing_rate,
        seed=args.seed,
    )
    cohort = generate_cohort(spec)
    write_cohort_csv(cohort, args.output)
    print(f"patients: {len(cohort)}")
    print(f"steps per patient: {spec.steps_per_patient}")
    print(f"missing cells: {cohort.missing_count}")
    print(f"written: {args.output}")
    return 0
