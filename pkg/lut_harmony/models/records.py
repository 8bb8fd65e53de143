"""Records produced by augmentation, training and evaluation."""

import logging
import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from lut_harmony.models.image import ImageF32, Mask, Rect

logger = logging.getLogger(__name__)


class Provenance(BaseModel):
    """Where a triplet came from: enough to regenerate it bit for bit."""

    model_config = ConfigDict(frozen=True)

    image_id: str
    seed: int
    jitter_size: int
    content_rect: Rect
    reference_rect: Rect
    lut_a: str
    lut_b: str


class TripletSample(BaseModel):
    """
    One self-supervised training unit.

    content_a/content_b share the content crop, ref_a/ref_b share the reference crop;
    the _a images carry appearance alpha and the _b images appearance beta.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    content_a: ImageF32
    content_b: ImageF32
    ref_a: ImageF32
    ref_b: ImageF32
    provenance: Optional[Provenance] = None

    @model_validator(mode="after")
    def validate_sizes(self) -> "TripletSample":
        sizes = {img.size for img in (self.content_a, self.content_b, self.ref_a, self.ref_b)}
        if len(sizes) != 1:
            raise ValueError(f"Triplet images must share one size, got {sorted(sizes)}")
        return self


class LossReport(BaseModel):
    """Objective terms of one triplet (or a sum over a batch)."""

    model_config = ConfigDict(frozen=True)

    l_harm: float = Field(..., ge=0.0)
    l_recon: float = Field(..., ge=0.0)
    l_dis: float = Field(..., ge=0.0)
    l_dis_content: float = Field(..., ge=0.0)
    total: float = Field(..., ge=0.0)

    @classmethod
    def compose(
            cls,
            l_harm: float,
            l_recon: float,
            l_dis: float,
            l_dis_content: float,
            w1: float,
            w2: float
    ) -> "LossReport":
        """Build a report whose total is l_harm + w1*l_recon + w2*l_dis."""
        return cls(
            l_harm=l_harm,
            l_recon=l_recon,
            l_dis=l_dis,
            l_dis_content=l_dis_content,
            total=l_harm + w1 * l_recon + w2 * l_dis,
        )

    @classmethod
    def zero(cls) -> "LossReport":
        return cls(l_harm=0.0, l_recon=0.0, l_dis=0.0, l_dis_content=0.0, total=0.0)

    def __add__(self, other: "LossReport") -> "LossReport":
        return LossReport(
            l_harm=self.l_harm + other.l_harm,
            l_recon=self.l_recon + other.l_recon,
            l_dis=self.l_dis + other.l_dis,
            l_dis_content=self.l_dis_content + other.l_dis_content,
            total=self.total + other.total,
        )

    def scaled(self, factor: float) -> "LossReport":
        return LossReport(
            l_harm=self.l_harm * factor,
            l_recon=self.l_recon * factor,
            l_dis=self.l_dis * factor,
            l_dis_content=self.l_dis_content * factor,
            total=self.total * factor,
        )


class MetricsReport(BaseModel):
    """MSE on the 0-255 scale, PSNR in dB (+inf for identical images) and SSIM."""

    model_config = ConfigDict(frozen=True)

    mse: float = Field(..., ge=0.0)
    psnr: float
    ssim: float = Field(..., ge=-1.0, le=1.0)

    @field_serializer("psnr")
    def serialize_psnr(self, value: float):
        if math.isinf(value):
            return "inf"
        return value


class MetricsSummary(BaseModel):
    """Per-case mean and median of each metric."""

    model_config = ConfigDict(frozen=True)

    mean: MetricsReport
    median: MetricsReport


class CaseResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    case_id: str
    method: MetricsReport
    baseline: MetricsReport


class BenchmarkReport(BaseModel):
    """Per-case rows plus aggregates for the harmonized output and the direct composite."""

    model_config = ConfigDict(frozen=True)

    cases: List[CaseResult]
    method: MetricsSummary
    baseline: MetricsSummary
    win_rate: float = Field(..., ge=0.0, le=1.0)


class BenchmarkCase(BaseModel):
    """A synthetic compositing case whose unperturbed original is the ground truth."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    case_id: str
    background: ImageF32
    foreground: ImageF32
    mask: Mask
    placement: Rect
    ground_truth: ImageF32
    heldout_lut_id: str

    @model_validator(mode="after")
    def validate_geometry(self) -> "BenchmarkCase":
        self.placement.require_within(self.background.width, self.background.height)
        extent = (self.placement.w, self.placement.h)
        if self.foreground.size != extent or (self.mask.width, self.mask.height) != extent:
            raise ValueError(
                f"foreground {self.foreground.size} and mask {(self.mask.width, self.mask.height)}"
                f" must match the placement extent {extent}"
            )
        if self.ground_truth.size != self.background.size:
            raise ValueError("ground truth and background must share one size")
        return self


class EpochRecord(BaseModel):
    """Mean objective terms of one epoch and the learning rate it ran at."""

    model_config = ConfigDict(frozen=True)

    epoch: int
    lr: float
    losses: LossReport


class TrainingHistory(BaseModel):
    epochs: List[EpochRecord] = Field(default_factory=list)
    step_totals: List[float] = Field(default_factory=list)


class CorpusItem(BaseModel):
    """An unlabeled source image and its stable id (file stem when loaded from disk)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    image_id: str
    image: ImageF32
