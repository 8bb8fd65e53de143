"""Raster models: RGB images, soft masks and pixel rectangles."""

import logging
from typing import Any, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from lut_harmony.exceptions import BoundsError

logger = logging.getLogger(__name__)


def _frozen_array(value: Any, ndim: int, name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.float32, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


class ImageF32(BaseModel):
    """
    Floating-point RGB raster, row-major (height, width, 3), nominal range [0, 1].

    The array is copied on construction and marked read-only.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(value, 3, "image data")
        if arr.shape[2] != 3:
            raise ValueError(f"image data must have 3 channels, got {arr.shape[2]}")
        return arr

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    def pixels(self) -> np.ndarray:
        """(height*width, 3) float64 view of the pixel values."""
        return self.data.reshape(-1, 3).astype(np.float64)

    def pixel(self, x: int, y: int) -> Tuple[float, float, float]:
        r, g, b = self.data[y, x]
        return float(r), float(g), float(b)

    @classmethod
    def constant(
            cls,
            width: int,
            height: int,
            rgb: Sequence[float]
    ) -> "ImageF32":
        """Create an image filled with a single color."""
        data = np.empty((height, width, 3), dtype=np.float32)
        data[...] = np.asarray(rgb, dtype=np.float32)
        return cls(data=data)

    def __str__(self) -> str:
        return f"ImageF32({self.width}x{self.height})"


class Mask(BaseModel):
    """Soft alpha mask, row-major (height, width), values in [0, 1]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(value, 2, "mask data")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        return arr

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @classmethod
    def filled(cls, width: int, height: int, value: float) -> "Mask":
        return cls(data=np.full((height, width), value, dtype=np.float32))

    def __str__(self) -> str:
        return f"Mask({self.width}x{self.height})"


class Rect(BaseModel):
    """Axis-aligned pixel rectangle: top-left (x, y) and extent (w, h)."""

    model_config = ConfigDict(frozen=True)

    x: int = Field(..., ge=0)
    y: int = Field(..., ge=0)
    w: int = Field(..., ge=1)
    h: int = Field(..., ge=1)

    @property
    def area(self) -> int:
        return self.w * self.h

    def fits(self, width: int, height: int) -> bool:
        return self.x + self.w <= width and self.y + self.h <= height

    def require_within(self, width: int, height: int) -> "Rect":
        """Return self, or raise BoundsError when the rect leaves a width x height image."""
        if not self.fits(width, height):
            raise BoundsError(
                f"{self} does not fit inside a {width}x{height} image"
            )
        return self

    def intersection_area(self, other: "Rect") -> int:
        dx = min(self.x + self.w, other.x + other.w) - max(self.x, other.x)
        dy = min(self.y + self.h, other.y + other.h) - max(self.y, other.y)
        return max(dx, 0) * max(dy, 0)

    def within(self, inner: "Rect") -> "Rect":
        """Translate a rect given relative to this one into this rect's parent frame."""
        return Rect(x=self.x + inner.x, y=self.y + inner.y, w=inner.w, h=inner.h)

    def slices(self) -> Tuple[slice, slice]:
        """(row slice, column slice) for indexing a (height, width, ...) array."""
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def __str__(self) -> str:
        return f"Rect(x={self.x}, y={self.y}, w={self.w}, h={self.h})"
