"""Process-level settings for s3mamba following 12-factor app principles."""

from pydantic import Field
from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict


class Settings(BaseSettings):
    """
    Runtime settings read from the environment.

    Run-specific knobs (model widths, schedules, scales) live in the JSON run
    configuration; this object only carries what changes per machine or per
    invocation.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Version
    version: str = "0.1.0"

    environment: str = Field(
        default="development",
        description="Environment (development, testing, production)",
        alias="S3MAMBA_ENVIRONMENT",
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level",
        alias="LOG_LEVEL",
    )
    debug: bool = Field(
        default=False,
        description="Check every tensor for NaN/Inf and every divisor for zero",
        alias="S3MAMBA_DEBUG",
    )

    workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Threads used for independent work such as corpus synthesis",
        alias="S3MAMBA_WORKERS",
    )

    bench_ratio_limit: float = Field(
        default=6.0,
        gt=1.0,
        description="Largest accepted time(4L)/time(L) ratio in bench-scan",
        alias="S3MAMBA_BENCH_RATIO_LIMIT",
    )

    @property
    def is_production(self) -> bool:
        """Check if running in production environment."""
        return self.environment == "production"

    def validate_config(self) -> None:
        """Validate settings that pydantic field constraints cannot express."""
        errors = []

        if self.environment not in {"development", "testing", "production"}:
            errors.append(f"Unknown environment {self.environment!r}")
        if self.log_level.upper() not in {
            "CRITICAL",
            "ERROR",
            "WARNING",
            "INFO",
            "DEBUG",
        }:
            errors.append(f"Unknown log level {self.log_level!r}")

        if errors:
            raise ValueError(f"Configuration validation failed: {'; '.join(errors)}")


# Global settings instance
settings = Settings()

try:
    settings.validate_config()
except ValueError as e:
    import warnings

    warnings.warn(f"Configuration warning: {e}", stacklevel=2)
