"""Abstract base class for appearance perturbations."""

import logging
from abc import ABC, abstractmethod

import numpy as np
from pydantic import BaseModel, ConfigDict

from lut_harmony.models.image import ImageF32

logger = logging.getLogger(__name__)


class BaseAppearance(BaseModel, ABC):
    """
    Abstract base class for pointwise appearance changes.

    Implements Template Method pattern: subclasses map a (P, 3) pixel array,
    the base handles reshaping, clamping and identification.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @abstractmethod
    def _map_pixels(self, pixels: np.ndarray) -> np.ndarray:
        """Map (P, 3) float64 colors to (P, 3) colors (subclasses must implement)."""
        pass

    @abstractmethod
    def _describe(self) -> str:
        """Short parameter summary used in the appearance id."""
        pass

    @property
    def kind(self) -> str:
        return self.__class__.__name__.replace("Appearance", "").lower()

    @property
    def appearance_id(self) -> str:
        return f"{self.kind}:{self._describe()}"

    def apply(self, image: ImageF32) -> ImageF32:
        """Apply the perturbation to every pixel; output clamped to [0, 1]."""
        mapped = self._map_pixels(image.data.reshape(-1, 3).astype(np.float64))
        return ImageF32(data=np.clip(mapped, 0.0, 1.0).reshape(image.data.shape))

    def __str__(self) -> str:
        return f"{self.__class__.__name__}({self.appearance_id})"
