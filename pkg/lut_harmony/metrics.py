"""Full-reference quality metrics (MSE, PSNR, SSIM) and benchmark report writers."""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.signal import convolve2d

from lut_harmony.exceptions import DimensionMismatchError
from lut_harmony.imagecore import luminance
from lut_harmony.models.image import ImageF32
from lut_harmony.models.records import (
    BenchmarkReport,
    CaseResult,
    MetricsReport,
    MetricsSummary,
)
from lut_harmony.utils import write_bytes

logger = logging.getLogger(__name__)

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _check_sizes(a: ImageF32, b: ImageF32) -> None:
    if a.size != b.size:
        raise DimensionMismatchError(f"image sizes differ: {a.size} vs {b.size}")


def mse(a: ImageF32, b: ImageF32) -> float:
    """Mean of (255*(a-b))^2 over all pixels and channels."""
    _check_sizes(a, b)
    diff = PEAK * (a.data.astype(np.float64) - b.data.astype(np.float64))
    return float(np.mean(diff * diff))


def psnr_from_mse(value: float) -> float:
    if value == 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK / value)


def psnr(a: ImageF32, b: ImageF32) -> float:
    """PSNR in dB; math.inf for identical images."""
    return psnr_from_mse(mse(a, b))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    y, x = np.ogrid[-half:half + 1, -half:half + 1]
    window = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return window / window.sum()


def _filter_valid(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    return convolve2d(x, np.rot90(window, 2), mode="valid")


def ssim(a: ImageF32, b: ImageF32) -> float:
    """
    Single-scale SSIM on Rec.601 luma.

    11x11 Gaussian window (sigma 1.5), C1 = 0.01^2 and C2 = 0.03^2 for dynamic range 1,
    valid-window filtering and the mean of the SSIM map.
    """
    _check_sizes(a, b)
    if min(a.size) < SSIM_WINDOW:
        raise DimensionMismatchError(
            f"SSIM needs both sides >= {SSIM_WINDOW}, image is {a.width}x{a.height}"
        )
    x = luminance(a)
    y = luminance(b)
    window = gaussian_window()

    mu1 = _filter_valid(x, window)
    mu2 = _filter_valid(y, window)
    mu1_sq = mu1 * mu1
    mu2_sq = mu2 * mu2
    mu1_mu2 = mu1 * mu2
    sigma1_sq = _filter_valid(x * x, window) - mu1_sq
    sigma2_sq = _filter_valid(y * y, window) - mu2_sq
    sigma12 = _filter_valid(x * y, window) - mu1_mu2

    ssim_map = ((2 * mu1_mu2 + SSIM_C1) * (2 * sigma12 + SSIM_C2)) / (
        (mu1_sq + mu2_sq + SSIM_C1) * (sigma1_sq + sigma2_sq + SSIM_C2)
    )
    return float(np.clip(np.mean(ssim_map), -1.0, 1.0))


def report(output: ImageF32, gt: ImageF32) -> MetricsReport:
    value = mse(output, gt)
    return MetricsReport(mse=value, psnr=psnr_from_mse(value), ssim=ssim(output, gt))


def evaluate_pair(
        output: ImageF32,
        gt: ImageF32,
        baseline: ImageF32
) -> Tuple[MetricsReport, MetricsReport]:
    """Metrics of (output, gt) and of (baseline, gt). Callers resize to the evaluation size."""
    return report(output, gt), report(baseline, gt)


def _summarize(reports: Sequence[MetricsReport]) -> MetricsSummary:
    columns = {
        name: np.array([getattr(r, name) for r in reports], dtype=np.float64)
        for name in ("mse", "psnr", "ssim")
    }
    return MetricsSummary(
        mean=MetricsReport(**{k: float(np.mean(v)) for k, v in columns.items()}),
        median=MetricsReport(**{k: float(np.median(v)) for k, v in columns.items()}),
    )


def win_rate(cases: Sequence[CaseResult]) -> float:
    """Fraction of cases where the harmonized MSE is strictly below the baseline MSE."""
    if not cases:
        return 0.0
    return sum(1 for c in cases if c.method.mse < c.baseline.mse) / len(cases)


def aggregate(cases: Sequence[CaseResult]) -> BenchmarkReport:
    """Per-case mean and median of each metric, for method and baseline, in case order."""
    if not cases:
        raise ValueError("Cannot aggregate an empty case list")
    result = BenchmarkReport(
        cases=list(cases),
        method=_summarize([c.method for c in cases]),
        baseline=_summarize([c.baseline for c in cases]),
        win_rate=win_rate(cases),
    )
    logger.info(
        "Aggregated %d cases: median MSE %.3f (baseline %.3f), win rate %.2f",
        len(cases), result.method.median.mse, result.baseline.median.mse, result.win_rate
    )
    return result


def report_json(result: BenchmarkReport) -> str:
    return json.dumps(result.model_dump(mode="json"), indent=2) + "\n"


def write_report_json(path: Union[str, Path], result: BenchmarkReport) -> Path:
    target = Path(path)
    write_bytes(target, report_json(result).encode("utf-8"))
    logger.info("Wrote benchmark report %s", target)
    return target


def _fmt(value: float) -> str:
    return "inf" if math.isinf(value) else repr(value)


def report_csv(result: BenchmarkReport) -> str:
    """Aggregate rows: one per (statistic, method|baseline)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["stat", "which", "mse", "psnr", "ssim"])
    for stat in ("mean", "median"):
        for which in ("method", "baseline"):
            row: MetricsReport = getattr(getattr(result, which), stat)
            writer.writerow([stat, which, _fmt(row.mse), _fmt(row.psnr), _fmt(row.ssim)])
    return buffer.getvalue()


def write_report_csv(path: Union[str, Path], result: BenchmarkReport) -> Path:
    target = Path(path)
    write_bytes(target, report_csv(result).encode("utf-8"))
    logger.info("Wrote benchmark summary %s", target)
    return target
