"""
validate: dry-run ingestion and imputation of a patient CSV
"""

import argparse
import logging
import sys

from vitalcast.core.errors import CsvContractError, ImputationError
from vitalcast.services.ingest import validate_csv

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="Check a patient CSV against the ingestion contract")
    parser.add_argument("csv", help="Patient CSV path")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    try:
        summary = validate_csv(args.csv)
    except CsvContractError as exc:
        for line, message in exc.issues:
            print(f"line {line}: {message}", file=sys.stderr)
        logger.error(f"[CLI] ❌ {len(exc.issues)} contract violation(s) in {args.csv}")
        return 1
    except ImputationError as exc:
        print(f"imputation: {exc}", file=sys.stderr)
        return 1

    print(f"{'patient_id':<16}{'steps':>8}{'missing':>10}")
    for patient in summary.patients:
        print(f"{patient.patient_id:<16}{patient.p:>8}{patient.missing_cells:>10}")
    print(f"patients: {len(summary.patients)}, missing cells: {summary.total_missing}")
    for warning in summary.warnings:
        print(f"warning: {warning}")
    if summary.warnings:
        logger.warning(f"[CLI] ⚠️ {len(summary.warnings)} value-range warning(s)")
    return 0
