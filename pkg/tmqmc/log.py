"""
Logging - sink único do loguru
"""
import sys

from loguru import logger

from tmqmc.config import settings


def setup_logging(level: str | None = None, json: bool | None = None) -> None:
    """Reinstala o sink de stderr (texto ou JSON estruturado)"""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        serialize=settings.LOG_JSON if json is None else json,
        backtrace=settings.DEBUG,
        diagnose=settings.DEBUG,
    )
