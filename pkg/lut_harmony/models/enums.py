"""Enumerations for LUT Harmony."""

from enum import Enum


class ImageFormat(str, Enum):
    """Supported raster file formats."""
    PNG8 = "png8"
    PPM = "ppm"


class CropMode(str, Enum):
    """Content augmentation: how the content and reference crops relate."""
    MULTI_CROP = "multi_crop"
    SINGLE_CROP = "single_crop"


class AppearanceMode(str, Enum):
    """Appearance augmentation used to build the alpha/beta pair."""
    LUT = "lut"
    COLOR_TRANSFER = "color_transfer"
    SATURATION = "saturation"


class MaskStyle(str, Enum):
    """Shape of synthetic benchmark masks."""
    RECT = "rect"
    ELLIPSE = "ellipse"


# Rec.601 luma weights shared by saturation jitter and SSIM.
REC601_WEIGHTS = (0.299, 0.587, 0.114)
