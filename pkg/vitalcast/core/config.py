"""
Configuration Management

Loads and validates runtime settings for vitalcast.

Experiment-level parameters (horizons, model hyperparameters, ...) live in the
JSON experiment document, see vitalcast.models.experiment_model. This module only
covers process-wide knobs read from the environment / .env file.
"""

import logging

from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings

load_dotenv()


class Settings(BaseSettings):
    """Runtime settings loaded from VITALCAST_* environment variables"""

    # Parallelism
    THREADS: int = 1

    # Logging
    LOG_LEVEL: str = "INFO"

    # Caching
    MI_CACHE_SIZE: int = 4096

    # Reporting
    REPORT_DECIMALS: int = 2

    class Config:
        env_prefix = "VITALCAST_"
        env_file = ".env"
        case_sensitive = True
        extra = "ignore"  # Ignore extra environment variables

    @field_validator("THREADS")
    @classmethod
    def _threads_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("VITALCAST_THREADS must be >= 1")
        return value

    @field_validator("LOG_LEVEL")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {value}")
        return level


# Global settings instance
settings = Settings()


def log_config_status():
    """Log configuration status for debugging"""
    logger = logging.getLogger(__name__)

    logger.info("=== vitalcast Configuration ===")
    logger.info(f"Worker parallelism: {settings.THREADS}")
    logger.info(f"Log level: {settings.LOG_LEVEL}")
    logger.info(f"MI cache size: {settings.MI_CACHE_SIZE}")
    logger.info(f"Report decimals: {settings.REPORT_DECIMALS}")
    logger.info("===============================")
