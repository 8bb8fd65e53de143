"""Appearance perturbations package initialization."""

from lut_harmony.appearance.lut_appearance import LutAppearance
from lut_harmony.appearance.photometric import (
    ChannelStats,
    ColorTransferAppearance,
    SaturationAppearance,
    color_transfer_meanstd,
    saturation_jitter,
)


__all__ = [
    "LutAppearance",
    "ChannelStats",
    "ColorTransferAppearance",
    "SaturationAppearance",
    "color_transfer_meanstd",
    "saturation_jitter",
]
