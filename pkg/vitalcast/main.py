"""
vitalcast command-line entry point

Registers one subcommand per module in vitalcast.cli.commands:

- gen-data: synthetic cohort CSV
- validate: ingestion dry run
- experiment: full method suite and reports
- mi-report: MI score table and G' membership
- train / predict: single-model checkpoints

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from vitalcast.cli.commands import COMMANDS
from vitalcast.core.config import log_config_status, settings
from vitalcast.core.errors import ConfigError, VitalcastError

# Load environment variables
load_dotenv()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper()),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vitalcast",
        description="Generative boosting for multistep vital-sign forecasting",
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Override VITALCAST_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", metavar="<command>")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    configure_logging(args.log_level)
    log_config_status()
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        logger.error(f"[CLI] ❌ Invalid configuration: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VitalcastError, OSError) as exc:
        logger.error(f"[CLI] ❌ {args.command} failed: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
