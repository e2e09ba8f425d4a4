import logging

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class RuntimeSettings(BaseSettings):
    """
    Process-level settings loaded from environment variables.

    Attributes:
        threads: Maximal number of sweep members solved concurrently (THINFILM_THREADS).
        log_level: Root logger level name (THINFILM_LOG_LEVEL).
    """

    model_config = SettingsConfigDict(env_prefix="THINFILM_", env_file=".env", extra="ignore")

    threads: int = 1
    log_level: str = "INFO"

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        """
        Clamp the thread cap to at least one worker.

        Args:
            v: Requested number of workers.

        Returns:
            Validated number of workers.
        """
        if v < 1:
            logger.warning(f"THINFILM_THREADS={v} is not positive, using 1")
            return 1
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """
        Normalise the log level name.

        Args:
            v: Level name such as "info" or "DEBUG".

        Returns:
            Upper-case level name known to the logging module.
        """
        name = v.upper()
        if name not in logging.getLevelNamesMapping():
            raise ValueError(f"Unknown log level '{v}'")
        return name


def get_runtime_settings() -> RuntimeSettings:
    """
    Read runtime settings from the current environment.

    Returns:
        Fresh RuntimeSettings instance.
    """
    return RuntimeSettings()
