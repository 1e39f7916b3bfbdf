"""
experiment: run the full method suite and write the metrics reports
"""

import argparse
import logging

from vitalcast.cli.common import add_override_flags, apply_overrides, load_cohort
from vitalcast.models.experiment_model import load_experiment_config
from vitalcast.services.evaluation import run_suite
from vitalcast.services.report_service import emit_report, write_reports

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("experiment", help="Run every configured method and seed, write reports")
    parser.add_argument("config", help="Experiment JSON config")
    parser.add_argument("--output-dir", help="Override output.directory")
    add_override_flags(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    config = apply_overrides(
        load_experiment_config(args.config), seeds=args.seeds, methods=args.methods, horizons=args.horizons
    )
    if args.output_dir:
        config = config.model_copy(update={"output": config.output.model_copy(update={"directory": args.output_dir})})
    cohort = load_cohort(config.data)
    report = run_suite(config, cohort)
    paths = write_reports(report, config.output)
    print(emit_report(report, "markdown").decode("utf-8"), end="")
    for path in paths:
        print(f"written: {path}")
    return 0
