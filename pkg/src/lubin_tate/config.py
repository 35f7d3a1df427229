"""
Environment configuration
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

DEFAULT_TERM_CAP = 200_000


def _env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Settings(BaseModel):
    """Defaults taken from LUBIN_TATE_* environment variables"""

    output_dir: str = "./output"
    max_workers: int = Field(default=1, ge=1, le=64)
    term_cap: int = Field(default=DEFAULT_TERM_CAP, ge=1)
    log_level: str = "WARNING"
    allow_heavy: bool = False

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accept any name the logging module knows"""
        level = v.strip().upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level: {v}")
        return level


def load_settings(env_file: Optional[str] = None) -> Settings:
    """
    Read settings from the environment, after loading a .env file if present

    Args:
        env_file: Explicit .env path; the default search is used when omitted

    Returns:
        Validated Settings
    """
    load_dotenv(env_file)
    settings = Settings(
        output_dir=os.getenv("LUBIN_TATE_OUTPUT_DIR", "./output"),
        max_workers=int(os.getenv("LUBIN_TATE_MAX_WORKERS", "1")),
        term_cap=int(os.getenv("LUBIN_TATE_TERM_CAP", str(DEFAULT_TERM_CAP))),
        log_level=os.getenv("LUBIN_TATE_LOG_LEVEL", "WARNING"),
        allow_heavy=_env_flag("LUBIN_TATE_ALLOW_HEAVY"),
    )
    logger.debug(f"Loaded settings: {settings}")
    return settings
