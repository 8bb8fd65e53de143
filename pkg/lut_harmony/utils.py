"""Utility functions for LUT Harmony."""

import hashlib
import logging
from pathlib import Path
from typing import Callable, Optional, TypeVar, Union

from tenacity import (
    RetryError,
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    retry_if_result,
    stop_after_attempt,
    wait_exponential,
)

from lut_harmony.config import config
from lut_harmony.exceptions import DatasetError, GenerationError, LutValidationError

logger = logging.getLogger(__name__)

T = TypeVar("T")

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """splitmix64 finalizer: a bijective avalanche over 64-bit integers."""
    z = value & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the seed of item `index` from a master seed.

    seed_i = splitmix64(master_seed + (index + 1) * 0x9E3779B97F4A7C15 mod 2^64).
    Items never share random state, so any worker count reproduces the same items.
    """
    return splitmix64((master_seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sample_until(
        draw: Callable[[], T],
        accept: Callable[[T], bool],
        what: str,
        max_draws: Optional[int] = None
) -> T:
    """Rejection-sample `draw()` until `accept` holds, giving up after max_draws."""
    limit = max_draws or config.max_rejection_draws
    retryer = Retrying(
        stop=stop_after_attempt(limit),
        retry=retry_if_result(lambda candidate: not accept(candidate)),
    )
    try:
        return retryer(draw)
    except RetryError as e:
        raise GenerationError(
            f"Could not sample {what} within {limit} draws; geometry is degenerate"
        ) from e


def write_bytes(path: Union[str, Path], data: bytes) -> None:
    """Write a file, retrying transient OS errors with exponential backoff."""
    target = Path(path)
    retryer = Retrying(
        stop=stop_after_attempt(config.retry_max_attempts),
        wait=wait_exponential(
            multiplier=config.retry_backoff_multiplier,
            min=config.retry_min_wait,
            max=config.retry_max_wait,
        ),
        retry=retry_if_exception_type(OSError),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        retryer(target.write_bytes, data)
    except OSError as e:
        raise DatasetError(f"Cannot write {target}: {e}") from e
    logger.debug("Wrote %d bytes to %s", len(data), target)


def validate_unit_interval(value: float, param_name: str = "parameter") -> float:
    """Validate a parameter that must lie in [0, 1]."""
    if not 0.0 <= value <= 1.0:
        raise LutValidationError(f"Invalid {param_name}: {value}. Must be between 0 and 1.")
    return value
