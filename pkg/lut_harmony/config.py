"""Global runtime configuration for LUT Harmony."""

import logging
import threading
from typing import Optional

logger = logging.getLogger(__name__)


class HarmonyConfig:
    """Runtime knobs shared by every module (thread-safe singleton)."""

    _instance: Optional["HarmonyConfig"] = None
    _initialized: bool = False
    _lock: threading.Lock = threading.Lock()

    def __new__(cls, **kwargs):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(
        self,
        retry_max_attempts: int = 3,
        retry_backoff_multiplier: float = 0.5,
        retry_min_wait: float = 0.1,
        retry_max_wait: float = 2.0,
        max_rejection_draws: int = 10_000,
        default_lut_size: int = 17,
        evaluation_size: int = 256,
        workers: int = 1,
        png_compress_level: int = 6,
    ):
        if HarmonyConfig._initialized:
            return

        self.retry_max_attempts = retry_max_attempts
        self.retry_backoff_multiplier = retry_backoff_multiplier
        self.retry_min_wait = retry_min_wait
        self.retry_max_wait = retry_max_wait
        self.max_rejection_draws = max_rejection_draws
        self.default_lut_size = default_lut_size
        self.evaluation_size = evaluation_size
        self.workers = workers
        self.png_compress_level = png_compress_level

        HarmonyConfig._initialized = True

    @classmethod
    def get_instance(cls) -> "HarmonyConfig":
        if cls._instance is None:
            cls._instance = cls()
        return cls._instance

    @classmethod
    def reset(cls) -> None:
        """Reset the singleton instance (for testing)."""
        cls._instance = None
        cls._initialized = False

    def update(self, **kwargs) -> None:
        """Set runtime knobs by name; unknown names are logged and ignored."""
        for key, value in kwargs.items():
            if hasattr(self, key) and not key.startswith('_'):
                setattr(self, key, value)
                logger.info("Runtime knob %s set to %s", key, value)
            else:
                logger.warning("Ignoring unknown runtime knob: %s", key)

    def __repr__(self) -> str:
        return (
            f"HarmonyConfig("
            f"max_rejection_draws={self.max_rejection_draws}, "
            f"default_lut_size={self.default_lut_size}, "
            f"evaluation_size={self.evaluation_size}, "
            f"workers={self.workers}, "
            f"retry_max_attempts={self.retry_max_attempts})"
        )


config = HarmonyConfig.get_instance()
