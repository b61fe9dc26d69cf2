from typing import Optional

from pydantic import BaseModel, Field


class LoggingSettings(BaseModel):
    """Logging settings."""

    level: str = Field(default="INFO", description="Root log level for the package")
    format: str = Field(
        default="%(asctime)s %(levelname)s %(name)s: %(message)s",
        description="Format string of the stream handler",
    )


class RuntimeSettings(BaseModel):
    """Execution resources. None of these change numerical results."""

    block_workers: int = Field(default=4, ge=1, description="Thread pool size for block-Jacobi subsolves")
    ray_address: Optional[str] = Field(
        default=None, description="Address of an existing ray cluster; local runtime when unset"
    )


class AppSettings(BaseModel):
    """Application settings."""

    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    runtime: RuntimeSettings = Field(default_factory=RuntimeSettings)

    @classmethod
    def from_env(cls) -> "AppSettings":
        """Create settings from environment variables."""
        from os import environ

        from dotenv import load_dotenv

        load_dotenv()

        return cls(
            logging=LoggingSettings(
                level=environ.get("COMPOSA_LOG_LEVEL", "INFO").upper(),
                format=environ.get("COMPOSA_LOG_FORMAT", LoggingSettings().format),
            ),
            runtime=RuntimeSettings(
                block_workers=int(environ.get("COMPOSA_BLOCK_WORKERS", "4")),
                ray_address=environ.get("COMPOSA_RAY_ADDRESS") or None,
            ),
        )


# Create a singleton instance of AppSettings
settings = AppSettings.from_env()
