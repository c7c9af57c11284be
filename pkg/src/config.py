"""Runtime settings, read from the environment (and a local .env file)."""
import logging
import os
from contextlib import contextmanager
from functools import lru_cache
from typing import Iterator, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()

DEFAULT_MAX_ENUM = 1_000_000
DEFAULT_UNIVERSALITY_BOUND = 3


class Settings(BaseModel):
    """Caps and logging level shared by every module."""

    max_enum: int = Field(DEFAULT_MAX_ENUM, gt=0)
    universality_bound: int = Field(DEFAULT_UNIVERSALITY_BOUND, ge=0)
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            max_enum=int(os.getenv("TOPOS_MAX_ENUM", DEFAULT_MAX_ENUM)),
            universality_bound=int(
                os.getenv("TOPOS_UNIVERSALITY_BOUND", DEFAULT_UNIVERSALITY_BOUND)
            ),
            log_level=os.getenv("TOPOS_LOG_LEVEL", "WARNING"),
        )


_override: Optional[Settings] = None


@lru_cache(maxsize=1)
def _env_settings() -> Settings:
    return Settings.from_env()


def get_settings() -> Settings:
    if _override is not None:
        return _override
    return _env_settings()


@contextmanager
def override_settings(**changes) -> Iterator[Settings]:
    """Temporarily replace settings fields (used by --max-enum and tests)."""
    global _override
    previous = _override
    _override = get_settings().model_copy(update=changes)
    try:
        yield _override
    finally:
        _override = previous


def enum_limit(limit: Optional[int] = None) -> int:
    return limit if limit is not None else get_settings().max_enum


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else get_settings().log_level
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
