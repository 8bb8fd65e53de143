"""Handcrafted appearance statistics fed to the reference and fusion networks."""

import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from lut_harmony.models.image import ImageF32

logger = logging.getLogger(__name__)

HIST_BINS = 8
FEATURE_DIM = 3 + 3 + 3 * HIST_BINS


class AppearanceFeatures(BaseModel):
    """
    30-dim appearance vector: per-channel mean (3), std (3), then an 8-bin normalized
    histogram per channel (R bins, G bins, B bins).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vector: np.ndarray

    @field_validator("vector", mode="before")
    @classmethod
    def validate_vector(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.shape != (FEATURE_DIM,):
            raise ValueError(f"feature vector must have shape ({FEATURE_DIM},), got {arr.shape}")
        arr.setflags(write=False)
        return arr

    @property
    def mean(self) -> np.ndarray:
        return self.vector[0:3]

    @property
    def std(self) -> np.ndarray:
        return self.vector[3:6]

    @property
    def histograms(self) -> np.ndarray:
        """(3, 8) array, one normalized histogram per channel."""
        return self.vector[6:].reshape(3, HIST_BINS)


def extract_features(image: ImageF32) -> AppearanceFeatures:
    """Order-invariant color statistics; bin k holds [k/8, (k+1)/8), the last bin is closed."""
    pixels = image.pixels()
    count = pixels.shape[0]
    mean = pixels.mean(axis=0)
    std = pixels.std(axis=0)
    bins = np.clip(np.floor(pixels * HIST_BINS).astype(np.intp), 0, HIST_BINS - 1)
    hist = np.stack([
        np.bincount(bins[:, c], minlength=HIST_BINS) for c in range(3)
    ]).astype(np.float64) / count
    return AppearanceFeatures(vector=np.concatenate([mean, std, hist.ravel()]))
