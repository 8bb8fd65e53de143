"""Global photometric perturbations used as appearance-augmentation baselines."""

import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from lut_harmony.models.base import BaseAppearance
from lut_harmony.models.enums import REC601_WEIGHTS
from lut_harmony.models.image import ImageF32

logger = logging.getLogger(__name__)

Triple = Tuple[float, float, float]

STD_FLOOR = 1e-6
TARGET_MEAN_RANGE = (0.25, 0.75)
TARGET_STD_RANGE = (0.1, 0.3)
SATURATION_RANGE = (0.3, 1.7)


class ChannelStats(BaseModel):
    """Per-channel mean and standard deviation."""

    model_config = ConfigDict(frozen=True)

    mean: Triple
    std: Triple

    @field_validator("std")
    @classmethod
    def validate_std(cls, value: Triple) -> Triple:
        if any(s < 0 for s in value):
            raise ValueError(f"standard deviations must be non-negative, got {value}")
        return value

    @classmethod
    def of(cls, image: ImageF32) -> "ChannelStats":
        pixels = image.pixels()
        mean = pixels.mean(axis=0)
        std = pixels.std(axis=0)
        return cls(mean=tuple(mean.tolist()), std=tuple(std.tolist()))


def _transfer(pixels: np.ndarray, source: ChannelStats, target: ChannelStats) -> np.ndarray:
    mu_s = np.asarray(source.mean)
    sigma_s = np.maximum(np.asarray(source.std), STD_FLOOR)
    return (pixels - mu_s) / sigma_s * np.asarray(target.std) + np.asarray(target.mean)


def color_transfer_meanstd(
        src: ImageF32,
        target: ChannelStats,
        source: Optional[ChannelStats] = None
) -> ImageF32:
    """
    Per-channel mean/std matching: (src - mu_src) / max(sigma_src, 1e-6) * sigma_t + mu_t.

    `source` defaults to the statistics of `src` itself; passing the statistics of a
    larger image applies that image's global map to a crop of it.
    """
    source = source or ChannelStats.of(src)
    out = _transfer(src.pixels(), source, target)
    return ImageF32(data=np.clip(out, 0.0, 1.0).reshape(src.data.shape))


def _desaturate(pixels: np.ndarray, factor: float) -> np.ndarray:
    gray = (pixels @ np.asarray(REC601_WEIGHTS))[:, None]
    return gray + factor * (pixels - gray)


def saturation_jitter(src: ImageF32, factor: float) -> ImageF32:
    """gray + factor * (src - gray) with Rec.601 gray, clamped to [0, 1]."""
    if factor < 0:
        raise ValueError(f"Saturation factor must be non-negative, got {factor}")
    out = _desaturate(src.pixels(), factor)
    return ImageF32(data=np.clip(out, 0.0, 1.0).reshape(src.data.shape))


class ColorTransferAppearance(BaseAppearance):
    """Global mean/std color transfer toward random target statistics."""

    source: ChannelStats
    target: ChannelStats

    def _map_pixels(self, pixels: np.ndarray) -> np.ndarray:
        return _transfer(pixels, self.source, self.target)

    def _describe(self) -> str:
        mean = ",".join(f"{v:.3f}" for v in self.target.mean)
        std = ",".join(f"{v:.3f}" for v in self.target.std)
        return f"mean={mean};std={std}"

    @classmethod
    def random(cls, rng: np.random.Generator, source_image: ImageF32) -> "ColorTransferAppearance":
        """Draw target statistics; the source statistics come from the whole image."""
        mean = rng.uniform(*TARGET_MEAN_RANGE, size=3)
        std = rng.uniform(*TARGET_STD_RANGE, size=3)
        return cls(
            source=ChannelStats.of(source_image),
            target=ChannelStats(mean=tuple(mean.tolist()), std=tuple(std.tolist())),
        )


class SaturationAppearance(BaseAppearance):
    """Saturation scaling about Rec.601 luminance."""

    factor: float = Field(..., ge=0.0)

    def _map_pixels(self, pixels: np.ndarray) -> np.ndarray:
        return _desaturate(pixels, self.factor)

    def _describe(self) -> str:
        return f"{self.factor:.4f}"

    @classmethod
    def random(cls, rng: np.random.Generator) -> "SaturationAppearance":
        return cls(factor=float(rng.uniform(*SATURATION_RANGE)))
