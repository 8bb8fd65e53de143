"""LUT Harmony models package initialization."""

from lut_harmony.models.enums import AppearanceMode, CropMode, ImageFormat, MaskStyle
from lut_harmony.models.image import ImageF32, Mask, Rect
from lut_harmony.models.lut import Lut3d
from lut_harmony.models.base import BaseAppearance
from lut_harmony.models.settings import (
    AugmentConfig,
    BenchmarkOptions,
    LossWeights,
    RunConfig,
    TrainConfig,
)
from lut_harmony.models.records import (
    BenchmarkCase,
    BenchmarkReport,
    CaseResult,
    CorpusItem,
    EpochRecord,
    LossReport,
    MetricsReport,
    MetricsSummary,
    Provenance,
    TrainingHistory,
    TripletSample,
)


__all__ = [
    "AppearanceMode",
    "CropMode",
    "ImageFormat",
    "MaskStyle",
    "ImageF32",
    "Mask",
    "Rect",
    "Lut3d",
    "BaseAppearance",
    "AugmentConfig",
    "BenchmarkOptions",
    "LossWeights",
    "RunConfig",
    "TrainConfig",
    "BenchmarkCase",
    "BenchmarkReport",
    "CaseResult",
    "CorpusItem",
    "EpochRecord",
    "LossReport",
    "MetricsReport",
    "MetricsSummary",
    "Provenance",
    "TrainingHistory",
    "TripletSample",
]
