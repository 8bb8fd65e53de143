"""3D LUT appearance perturbation."""

import logging

import numpy as np

from lut_harmony.lut import apply_lut_pixels, lut_id
from lut_harmony.models.base import BaseAppearance
from lut_harmony.models.lut import Lut3d

logger = logging.getLogger(__name__)


class LutAppearance(BaseAppearance):
    """Recolor through a 3D LUT; identified by the LUT's id."""

    lut: Lut3d

    def _map_pixels(self, pixels: np.ndarray) -> np.ndarray:
        return apply_lut_pixels(self.lut, pixels)

    def _describe(self) -> str:
        return lut_id(self.lut)

    @property
    def appearance_id(self) -> str:
        return lut_id(self.lut)
