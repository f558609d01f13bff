# settings.py
# Version: 1.0
# Purpose: Process-wide settings for the ReProCS library and CLI using Pydantic

# External imports - versions specified for reproducible deployments
from pydantic import BaseSettings, validator  # pydantic v1.10+
from typing import Optional
from pathlib import Path
import logging
from functools import lru_cache

# Configure logger
logger = logging.getLogger(__name__)

# Global constants
PROJECT_NAME = "ReProCS"

ALLOWED_ENVIRONMENTS = ["development", "staging", "production", "test"]
ALLOWED_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class Settings(BaseSettings):
    """
    Settings shared by the library, the experiment runner and the CLI.
    Values come from the environment or a local .env file.
    """

    # Core settings
    ENVIRONMENT: str = "development"
    PROJECT_NAME: str = PROJECT_NAME

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # Experiment runner defaults
    OUTPUT_DIR: Path = Path("reprocs_output")
    DEFAULT_JOBS: Optional[int] = None
    DEFAULT_SEED: int = 0

    @validator("ENVIRONMENT")
    def validate_environment(cls, v: str) -> str:
        """Validate environment setting."""
        if v not in ALLOWED_ENVIRONMENTS:
            raise ValueError(f"Environment must be one of {ALLOWED_ENVIRONMENTS}")
        return v

    @validator("LOG_LEVEL")
    def validate_log_level(cls, v: str) -> str:
        """Normalize and validate the log level name."""
        level = v.upper()
        if level not in ALLOWED_LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {ALLOWED_LOG_LEVELS}")
        return level

    @validator("DEFAULT_JOBS")
    def validate_jobs(cls, v: Optional[int]) -> Optional[int]:
        """Worker count must be positive when set."""
        if v is not None and v < 1:
            raise ValueError("DEFAULT_JOBS must be a positive integer")
        return v

    def resolve_jobs(self, requested: Optional[int] = None) -> int:
        """
        Returns the Monte-Carlo worker count.

        Args:
            requested: Explicit worker count from the command line

        Returns:
            int: requested, else DEFAULT_JOBS, else the number of available cores
        """
        if requested is not None:
            return max(1, int(requested))
        if self.DEFAULT_JOBS is not None:
            return self.DEFAULT_JOBS

        import psutil  # psutil v5.9+

        cores = psutil.cpu_count(logical=True) or 1
        logger.debug(f"Resolved worker count from available cores: {cores}")
        return cores

    class Config:
        """Pydantic configuration class."""
        case_sensitive = True
        env_file = ".env"
        env_file_encoding = "utf-8"
        env_prefix = "REPROCS_"
        validate_assignment = True
        extra = "forbid"


@lru_cache()
def get_settings() -> Settings:
    """
    Returns cached settings instance.
    Uses lru_cache to prevent multiple environment variable reads.
    """
    return Settings()


__all__ = ["Settings", "get_settings", "PROJECT_NAME"]
