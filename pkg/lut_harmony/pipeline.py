"""
Inference-time harmonization and the synthetic held-out benchmark.

The reference image R is always cut from the un-occluded background (whole, or a
locality crop around the placement), never from the composite, so a large pasted
foreground cannot hide the background appearance.
"""

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from lut_harmony.exceptions import ColorMapFitError, DimensionMismatchError, GenerationError
from lut_harmony.harmonizer import HarmonizerModel, harmonize, train
from lut_harmony.imagecore import composite, crop, resize_bilinear, resize_short_side
from lut_harmony.lut import apply_lut_image, lut_id
from lut_harmony.metrics import aggregate, evaluate_pair
from lut_harmony.models.enums import AppearanceMode, CropMode, MaskStyle
from lut_harmony.models.image import ImageF32, Mask, Rect
from lut_harmony.models.lut import Lut3d
from lut_harmony.models.records import BenchmarkCase, BenchmarkReport, CaseResult, CorpusItem
from lut_harmony.models.settings import BenchmarkOptions, LossWeights, RunConfig
from lut_harmony.utils import mix_seed, sample_until, write_bytes

logger = logging.getLogger(__name__)

MIN_REFERENCE_SIDE = 32
MIN_FIT_PIXELS = 1000
FIT_DAMPING = 1e-6
MASK_FALLOFF = 4
MIN_PLACEMENT_SIDE = 8
AREA_FRACTION_RANGE = (0.10, 0.60)
POLY_TERMS = 10


# ---------------------------------------------------------------------------
# Reference selection and compositing
# ---------------------------------------------------------------------------

def locality_rect(width: int, height: int, placement: Rect, expand: float = 2.0) -> Rect:
    """
    Placement scaled about its center by `expand`, at least 32 px a side.

    Each side is capped at the image size, then the rect is shifted (never shrunk) to lie
    inside the image, so near a border it is no longer centered on the placement.
    """
    if expand < 1.0:
        raise ValueError(f"expand must be >= 1, got {expand}")
    placement.require_within(width, height)
    w = min(width, max(int(math.floor(placement.w * expand + 0.5)), MIN_REFERENCE_SIDE))
    h = min(height, max(int(math.floor(placement.h * expand + 0.5)), MIN_REFERENCE_SIDE))
    cx = placement.x + placement.w / 2.0
    cy = placement.y + placement.h / 2.0
    x = min(max(int(math.floor(cx - w / 2.0 + 0.5)), 0), width - w)
    y = min(max(int(math.floor(cy - h / 2.0 + 0.5)), 0), height - h)
    return Rect(x=x, y=y, w=w, h=h)


def locality_crop(bg: ImageF32, placement: Rect, expand: float = 2.0) -> ImageF32:
    return crop(bg, locality_rect(bg.width, bg.height, placement, expand))


def select_reference(bg: ImageF32, placement: Rect, opts: Optional[BenchmarkOptions] = None) -> ImageF32:
    """R depends only on bg and placement."""
    opts = opts or BenchmarkOptions()
    if opts.locality:
        return locality_crop(bg, placement, opts.expand)
    return bg


def harmonize_composite(
        model: HarmonizerModel,
        fg: ImageF32,
        bg: ImageF32,
        mask: Mask,
        placement: Rect,
        opts: Optional[BenchmarkOptions] = None
) -> ImageF32:
    """Harmonize fg against the background reference, then alpha-composite it into bg."""
    reference = select_reference(bg, placement, opts)
    harmonized = harmonize(model, fg, reference)
    return composite(harmonized, bg, mask, placement)


# ---------------------------------------------------------------------------
# High-resolution color mapping
# ---------------------------------------------------------------------------

def _poly_basis(pixels: np.ndarray) -> np.ndarray:
    r, g, b = pixels[:, 0], pixels[:, 1], pixels[:, 2]
    return np.stack([np.ones_like(r), r, g, b, r * r, g * g, b * b, r * g, r * b, g * b], axis=1)


class PolyColorMap(BaseModel):
    """Degree-2 polynomial color map: out = basis(rgb) @ coefficients, basis of 10 terms."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coefficients: np.ndarray

    @field_validator("coefficients", mode="before")
    @classmethod
    def validate_coefficients(cls, value) -> np.ndarray:
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.shape != (POLY_TERMS, 3):
            raise ValueError(f"coefficients must have shape ({POLY_TERMS}, 3), got {arr.shape}")
        arr.setflags(write=False)
        return arr

    @classmethod
    def identity(cls) -> "PolyColorMap":
        coefficients = np.zeros((POLY_TERMS, 3))
        coefficients[1:4] = np.eye(3)
        return cls(coefficients=coefficients)

    def map_pixels(self, pixels: np.ndarray) -> np.ndarray:
        return _poly_basis(pixels) @ self.coefficients


def fit_color_map(lowres_in: ImageF32, lowres_out: ImageF32) -> PolyColorMap:
    """Least squares via damped normal equations (lambda = 1e-6)."""
    if lowres_in.size != lowres_out.size:
        raise DimensionMismatchError(
            f"color map fit needs equal sizes, got {lowres_in.size} and {lowres_out.size}"
        )
    x = lowres_in.pixels()
    y = lowres_out.pixels()
    if x.shape[0] < MIN_FIT_PIXELS:
        raise ColorMapFitError(
            f"color map fit needs at least {MIN_FIT_PIXELS} pixels, got {x.shape[0]}"
        )
    if np.all(np.ptp(x, axis=0) == 0.0) and np.any(np.ptp(y, axis=0) > 0.0):
        raise ColorMapFitError("constant input cannot explain a non-constant output")

    basis = _poly_basis(x)
    normal = basis.T @ basis + FIT_DAMPING * np.eye(POLY_TERMS)
    try:
        coefficients = np.linalg.solve(normal, basis.T @ y)
    except np.linalg.LinAlgError as e:
        raise ColorMapFitError(f"normal equations are singular: {e}") from e
    if not np.all(np.isfinite(coefficients)):
        raise ColorMapFitError("fitted coefficients are not finite")
    return PolyColorMap(coefficients=coefficients)


def apply_color_map(color_map: PolyColorMap, fullres_in: ImageF32) -> ImageF32:
    out = np.clip(color_map.map_pixels(fullres_in.pixels()), 0.0, 1.0)
    return ImageF32(data=out.reshape(fullres_in.data.shape))


def harmonize_highres(
        model: HarmonizerModel,
        fg: ImageF32,
        reference: ImageF32,
        lowres_side: int = 256
) -> ImageF32:
    """Harmonize a downsampled fg, fit a color map to the result and apply it at full size."""
    if min(fg.size) <= lowres_side:
        return harmonize(model, fg, reference)
    lowres = resize_short_side(fg, lowres_side)
    if lowres.width * lowres.height < MIN_FIT_PIXELS:
        return harmonize(model, fg, reference)
    color_map = fit_color_map(lowres, harmonize(model, lowres, reference))
    logger.debug("Fitted color map at %dx%d for a %dx%d foreground",
                 lowres.width, lowres.height, fg.width, fg.height)
    return apply_color_map(color_map, fg)


# ---------------------------------------------------------------------------
# Synthetic benchmark
# ---------------------------------------------------------------------------

def _edge_ramp(length: int) -> np.ndarray:
    idx = np.arange(length)
    distance = np.minimum(idx, length - 1 - idx) + 1
    return np.minimum(1.0, distance / MASK_FALLOFF)


def soft_mask(width: int, height: int, style: MaskStyle) -> Mask:
    """Rect or ellipse mask with a linear falloff over MASK_FALLOFF pixels at its border."""
    if style == MaskStyle.RECT:
        alpha = np.minimum(_edge_ramp(height)[:, None], _edge_ramp(width)[None, :])
    else:
        a, b = width / 2.0, height / 2.0
        dy = (np.arange(height) + 0.5 - b)[:, None] / b
        dx = (np.arange(width) + 0.5 - a)[None, :] / a
        radius = np.sqrt(dx * dx + dy * dy)
        alpha = np.clip((1.0 - radius) * min(a, b) / MASK_FALLOFF, 0.0, 1.0)
    return Mask(data=alpha)


def _sample_placement(rng: np.random.Generator, width: int, height: int) -> Rect:
    lo, hi = AREA_FRACTION_RANGE
    total = width * height

    def draw() -> Rect:
        w = int(rng.integers(MIN_PLACEMENT_SIDE, width + 1))
        h = int(rng.integers(MIN_PLACEMENT_SIDE, height + 1))
        x = int(rng.integers(0, width - w + 1))
        y = int(rng.integers(0, height - h + 1))
        return Rect(x=x, y=y, w=w, h=h)

    return sample_until(draw, lambda r: lo <= r.area / total <= hi, what="a benchmark placement")


def occlude(
        image: ImageF32,
        placement: Rect,
        mask: Mask,
        rng: np.random.Generator,
        donor: Optional[ImageF32] = None
) -> ImageF32:
    """
    Background seen behind a pasted object: image, with the fully opaque part of the
    mask showing a same-sized patch of donor scenery.

    Pixels with mask < 1 keep the image, so the direct composite of an unperturbed
    foreground still reproduces the image exactly.
    """
    if donor is None or donor.width < placement.w or donor.height < placement.h:
        donor = image
    x = int(rng.integers(0, donor.width - placement.w + 1))
    y = int(rng.integers(0, donor.height - placement.h + 1))
    patch = crop(donor, Rect(x=x, y=y, w=placement.w, h=placement.h)).data

    data = np.array(image.data)
    rows, cols = placement.slices()
    region = data[rows, cols]
    opaque = mask.data >= 1.0
    region[opaque] = patch[opaque]
    return ImageF32(data=data)


def make_case(
        index: int,
        image: ImageF32,
        lut: Lut3d,
        seed: int,
        mask_style: MaskStyle,
        donor: Optional[ImageF32] = None
) -> BenchmarkCase:
    """
    One case: the image is the ground truth and its placement region, under the
    held-out LUT, is the foreground.

    The background hides the object: behind the opaque mask it shows donor scenery,
    so the reference never contains the pixels the harmonizer has to reproduce.
    """
    if min(image.size) < 2 * MIN_PLACEMENT_SIDE:
        raise GenerationError(
            f"Image {image.width}x{image.height} is too small for benchmark placements; "
            f"both sides must be at least {2 * MIN_PLACEMENT_SIDE}"
        )
    rng = np.random.default_rng(seed)
    placement = _sample_placement(rng, image.width, image.height)
    mask = soft_mask(placement.w, placement.h, mask_style)
    return BenchmarkCase(
        case_id=f"case_{index:04d}",
        background=occlude(image, placement, mask, rng, donor),
        foreground=apply_lut_image(lut, crop(image, placement)),
        mask=mask,
        placement=placement,
        ground_truth=image,
        heldout_lut_id=lut_id(lut),
    )


def synth_benchmark(
        images: Sequence[Union[CorpusItem, ImageF32]],
        heldout_luts: Sequence[Lut3d],
        count: int,
        seed: int,
        mask_style: MaskStyle = MaskStyle.RECT
) -> List[BenchmarkCase]:
    """
    Cases whose foreground is a held-out LUT applied to the original crop.

    Case i draws image, LUT, donor image and placement from mix_seed(seed, i), so the
    case set is a pure function of the inputs. The donor is another image whenever
    there is more than one.
    """
    sources = [item.image if isinstance(item, CorpusItem) else item for item in images]
    if not sources:
        raise GenerationError("Benchmark needs at least one image")
    if not heldout_luts:
        raise GenerationError("Benchmark needs at least one held-out LUT")

    cases = []
    for i in range(count):
        case_seed = mix_seed(seed, i)
        rng = np.random.default_rng(case_seed)
        source = int(rng.integers(len(sources)))
        lut = heldout_luts[int(rng.integers(len(heldout_luts)))]
        donor = source
        if len(sources) > 1:
            donor = int(rng.integers(len(sources) - 1))
            if donor >= source:
                donor += 1
        cases.append(make_case(
            i, sources[source], lut, mix_seed(case_seed, 0), mask_style, sources[donor]
        ))
    logger.info("Synthesized %d benchmark cases (seed=%d, mask=%s)", count, seed, mask_style.value)
    return cases


def evaluate_case(
        model: HarmonizerModel,
        case: BenchmarkCase,
        opts: Optional[BenchmarkOptions] = None
) -> CaseResult:
    opts = opts or BenchmarkOptions()
    output = harmonize_composite(
        model, case.foreground, case.background, case.mask, case.placement, opts
    )
    baseline = composite(case.foreground, case.background, case.mask, case.placement)
    side = opts.evaluation_size
    method, dc = evaluate_pair(
        resize_bilinear(output, side, side),
        resize_bilinear(case.ground_truth, side, side),
        resize_bilinear(baseline, side, side),
    )
    return CaseResult(case_id=case.case_id, method=method, baseline=dc)


def run_benchmark(
        model: HarmonizerModel,
        cases: Sequence[BenchmarkCase],
        opts: Optional[BenchmarkOptions] = None,
        workers: int = 1
) -> BenchmarkReport:
    """Score harmonized output and direct composite against ground truth, in case order."""
    if not cases:
        raise GenerationError("Benchmark has no cases")
    if workers <= 1:
        results = [evaluate_case(model, case, opts) for case in cases]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda case: evaluate_case(model, case, opts), cases))
    return aggregate(results)


# ---------------------------------------------------------------------------
# Ablation matrix
# ---------------------------------------------------------------------------

class AblationCell(BaseModel):
    """One training variant: crop mode, appearance augmentation and loss weights."""

    model_config = ConfigDict(frozen=True)

    name: str
    mode: CropMode = CropMode.MULTI_CROP
    appearance: AppearanceMode = AppearanceMode.LUT
    drop_recon: bool = False
    drop_dis: bool = False

    def weights(self, base: LossWeights) -> LossWeights:
        weights = base
        if self.drop_recon:
            weights = weights.without_recon()
        if self.drop_dis:
            weights = weights.without_dis()
        return weights


class AblationRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    cell: str
    mode: CropMode
    appearance: AppearanceMode
    w1: float
    w2: float
    mse_median: float
    mse_mean: float
    psnr_median: float
    ssim_median: float
    dc_mse_median: float
    win_rate: float = Field(..., ge=0.0, le=1.0)


def default_cells() -> List[AblationCell]:
    """Crop mode x appearance, plus the two loss removals on the full configuration."""
    cells = [
        AblationCell(name=f"{mode.value}+{appearance.value}", mode=mode, appearance=appearance)
        for mode in CropMode
        for appearance in AppearanceMode
    ]
    cells.append(AblationCell(name="multi_crop+lut-no_recon", drop_recon=True))
    cells.append(AblationCell(name="multi_crop+lut-no_dis", drop_dis=True))
    return cells


def run_ablation_matrix(
        corpus: Sequence[Union[CorpusItem, ImageF32]],
        bank: Sequence[Lut3d],
        cases: Sequence[BenchmarkCase],
        run_cfg: RunConfig,
        cells: Optional[Sequence[AblationCell]] = None
) -> List[AblationRow]:
    """Train one model per cell with identical seeds and score each on the same cases."""
    rows = []
    for cell in cells or default_cells():
        aug_cfg = run_cfg.augment.model_copy(update={"mode": cell.mode, "appearance": cell.appearance})
        weights = cell.weights(run_cfg.loss)
        logger.info("Ablation cell %s: training", cell.name)
        model, _ = train(corpus, bank, run_cfg.train, aug_cfg, weights, run_cfg.workers)
        result = run_benchmark(model, cases, run_cfg.benchmark, run_cfg.workers)
        rows.append(AblationRow(
            cell=cell.name,
            mode=cell.mode,
            appearance=cell.appearance,
            w1=weights.w1,
            w2=weights.w2,
            mse_median=result.method.median.mse,
            mse_mean=result.method.mean.mse,
            psnr_median=result.method.median.psnr,
            ssim_median=result.method.median.ssim,
            dc_mse_median=result.baseline.median.mse,
            win_rate=result.win_rate,
        ))
    return rows


def ablation_csv(rows: Sequence[AblationRow]) -> str:
    buffer = io.StringIO()
    columns = list(AblationRow.model_fields)
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = [getattr(row, c) for c in columns]
        writer.writerow([
            v.value if isinstance(v, (CropMode, AppearanceMode))
            else "inf" if isinstance(v, float) and math.isinf(v)
            else v
            for v in values
        ])
    return buffer.getvalue()


def write_ablation_csv(path: Union[str, Path], rows: Sequence[AblationRow]) -> Path:
    target = Path(path)
    write_bytes(target, ablation_csv(rows).encode("utf-8"))
    logger.info("Wrote ablation table (%d cells) to %s", len(rows), target)
    return target
