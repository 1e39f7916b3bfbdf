"""
Shared CLI helpers: cohort loading and flag overrides for experiment configs
"""

import argparse
import logging
from typing import List, Optional

from vitalcast.models.experiment_model import DataSource, ExperimentConfig, parse_experiment_config
from vitalcast.models.patient_model import Cohort
from vitalcast.services.ingest import ingest_csv
from vitalcast.services.synthgen import generate_cohort

logger = logging.getLogger(__name__)


def int_list(text: str) -> List[int]:
    """argparse type for comma separated integers, e.g. `1,2,4`."""
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def name_list(text: str) -> List[str]:
    values = [part.strip() for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected at least one name")
    return values


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def load_cohort(source: DataSource) -> Cohort:
    """CSV path (relative to the working directory) or a synthetic cohort spec."""
    if source.path is not None:
        logger.info(f"[CLI] Loading cohort from {source.path}")
        return ingest_csv(source.path)
    return generate_cohort(source.synthetic)


def apply_overrides(
    config: ExperimentConfig,
    seeds: Optional[List[int]] = None,
    methods: Optional[List[str]] = None,
    horizons: Optional[List[int]] = None,
) -> ExperimentConfig:
    """Re-validate the config with command-line overrides; errors raise ConfigError."""
    payload = config.model_dump()
    if seeds is not None:
        payload["seeds"] = seeds
    if methods is not None:
        payload["methods"] = methods
    if horizons is not None:
        payload["horizons"] = horizons
    return parse_experiment_config(payload)


def add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=non_negative_int, action="append", dest="seeds",
                        help="Override config seeds (repeatable)")
    parser.add_argument("--methods", type=name_list, help="Comma separated method list, e.g. arima,glstm-g1")
    parser.add_argument("--horizons", type=int_list, help="Comma separated horizons, e.g. 1,2,4")
