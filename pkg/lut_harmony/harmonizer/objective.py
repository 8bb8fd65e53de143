"""
Self-supervised objective and its analytic gradient.

For a triplet (C_a, C_b, R_a, R_b):

    l_harm  = mean((F(C_a, G_r(R_b)) - C_b)^2)
    l_recon = mean((F(C_a, G_r(R_a)) - C_a)^2)
    l_dis   = mean((G_r(C_a) - G_r(R_a))^2)
    total   = l_harm + w1 * l_recon + w2 * l_dis

The harmonized outputs are unclamped here. l_dis_content is the pixel distance
between C_a and C_b; it is reported but never optimized.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np

from lut_harmony.exceptions import DimensionMismatchError, NumericError
from lut_harmony.harmonizer.features import extract_features
from lut_harmony.harmonizer.network import (
    CODE_DIM,
    PARAM_COUNT,
    REF_PARAM_COUNT,
    ColorTransform,
    HarmonizerModel,
    fuse_forward,
    layer_view,
    ref_encode,
    ref_forward,
)
from lut_harmony.models.records import LossReport, TripletSample
from lut_harmony.models.settings import LossWeights

logger = logging.getLogger(__name__)


def _check_finite(name: str, value: np.ndarray) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericError(name)


def _ref_backward(params: np.ndarray, grad: np.ndarray, x: np.ndarray, hidden: np.ndarray,
                  d_code: np.ndarray) -> None:
    """Accumulate dL/d(ref params) into grad given dL/dz."""
    layer_view(grad, "ref.w2")[...] += np.outer(d_code, hidden)
    layer_view(grad, "ref.b2")[...] += d_code
    d_pre = (layer_view(params, "ref.w2").T @ d_code) * (1.0 - hidden * hidden)
    layer_view(grad, "ref.w1")[...] += np.outer(d_pre, x)
    layer_view(grad, "ref.b1")[...] += d_pre


def _fuse_backward(params: np.ndarray, grad: np.ndarray, u: np.ndarray, hidden: np.ndarray,
                   d_raw: np.ndarray) -> np.ndarray:
    """Accumulate dL/d(fusion params) into grad; returns dL/dz for the code input."""
    layer_view(grad, "fuse.w2")[...] += np.outer(d_raw, hidden)
    layer_view(grad, "fuse.b2")[...] += d_raw
    d_pre = (layer_view(params, "fuse.w2").T @ d_raw) * (1.0 - hidden * hidden)
    layer_view(grad, "fuse.w1")[...] += np.outer(d_pre, u)
    layer_view(grad, "fuse.b1")[...] += d_pre
    return (layer_view(params, "fuse.w1").T @ d_pre)[:CODE_DIM]


def _transform_backward(pixels: np.ndarray, d_out: np.ndarray) -> np.ndarray:
    """dL/d(raw transform) given dL/d(output pixels)."""
    return np.concatenate([
        (d_out.T @ pixels).ravel(),
        d_out.sum(axis=0),
        (d_out * pixels * pixels).sum(axis=0),
    ])


def _evaluate(
        model: HarmonizerModel,
        triplet: TripletSample,
        weights: LossWeights,
        with_grad: bool
) -> Tuple[LossReport, np.ndarray]:
    if triplet.content_a.size != triplet.content_b.size:
        raise DimensionMismatchError(
            f"content_a {triplet.content_a.size} and content_b {triplet.content_b.size} differ in size"
        )
    params = model.params
    _check_finite("ref_encoder parameters", params[:REF_PARAM_COUNT])
    _check_finite("fusion parameters", params[REF_PARAM_COUNT:])

    content = triplet.content_a.pixels()
    target = triplet.content_b.pixels()
    phi_content = extract_features(triplet.content_a).vector
    phi_ref_a = extract_features(triplet.ref_a).vector
    phi_ref_b = extract_features(triplet.ref_b).vector

    z_rb, h_rb = ref_forward(params, phi_ref_b)
    z_ra, h_ra = ref_forward(params, phi_ref_a)
    z_ca, h_ca = ref_forward(params, phi_content)
    _check_finite("appearance code", np.concatenate([z_rb, z_ra, z_ca]))

    raw_b, hf_b, u_b = fuse_forward(params, z_rb, phi_content)
    raw_a, hf_a, u_a = fuse_forward(params, z_ra, phi_content)
    _check_finite("color transform", raw_b)
    _check_finite("color transform", raw_a)

    out_b = ColorTransform.from_raw(raw_b).apply_pixels(content)
    out_a = ColorTransform.from_raw(raw_a).apply_pixels(content)
    _check_finite("harmonized output", out_b)
    _check_finite("harmonized output", out_a)

    resid_b = out_b - target
    resid_a = out_a - content
    code_gap = z_ca - z_ra
    count = resid_b.size

    report = LossReport.compose(
        l_harm=float(np.mean(resid_b * resid_b)),
        l_recon=float(np.mean(resid_a * resid_a)),
        l_dis=float(np.mean(code_gap * code_gap)),
        l_dis_content=float(np.mean((content - target) ** 2)),
        w1=weights.w1,
        w2=weights.w2,
    )

    grad = np.zeros(PARAM_COUNT)
    if not with_grad:
        return report, grad

    d_raw_b = _transform_backward(content, 2.0 * resid_b / count)
    d_code_b = _fuse_backward(params, grad, u_b, hf_b, d_raw_b)
    _ref_backward(params, grad, phi_ref_b, h_rb, d_code_b)

    d_code_a = np.zeros(CODE_DIM)
    if weights.w1 != 0.0:
        d_raw_a = _transform_backward(content, 2.0 * weights.w1 * resid_a / count)
        d_code_a += _fuse_backward(params, grad, u_a, hf_a, d_raw_a)

    if weights.w2 != 0.0:
        d_gap = 2.0 * weights.w2 * code_gap / code_gap.size
        _ref_backward(params, grad, phi_content, h_ca, d_gap)
        d_code_a -= d_gap

    _ref_backward(params, grad, phi_ref_a, h_ra, d_code_a)
    _check_finite("gradient", grad)
    return report, grad


def loss_total(model: HarmonizerModel, triplet: TripletSample, weights: LossWeights) -> LossReport:
    """All objective terms of one triplet."""
    report, _ = _evaluate(model, triplet, weights, with_grad=False)
    return report


def grad(
        model: HarmonizerModel,
        triplet: TripletSample,
        weights: LossWeights
) -> Tuple[LossReport, np.ndarray]:
    """Loss report and d(total)/d(params) of one triplet, as a flat vector."""
    return _evaluate(model, triplet, weights, with_grad=True)


def batch_loss_and_grad(
        model: HarmonizerModel,
        batch: Sequence[TripletSample],
        weights: LossWeights,
        workers: int = 1
) -> Tuple[LossReport, np.ndarray]:
    """
    Summed losses and gradients of a batch.

    Per-triplet results may be computed on several workers, but they are always
    reduced in index order so the sum is bit-identical for any worker count.
    """
    if workers <= 1:
        results: List[Tuple[LossReport, np.ndarray]] = [grad(model, t, weights) for t in batch]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: grad(model, t, weights), batch))

    total = LossReport.zero()
    summed = np.zeros(PARAM_COUNT)
    for report, g in results:
        total = total + report
        summed += g
    return total, summed


def mean_disentanglement(model: HarmonizerModel, batch: Sequence[TripletSample]) -> float:
    """Mean over a batch of the code-space distance between content and reference of one appearance."""
    if not batch:
        return 0.0
    gaps = []
    for triplet in batch:
        gap = ref_encode(model, extract_features(triplet.content_a)) - ref_encode(
            model, extract_features(triplet.ref_a)
        )
        gaps.append(float(np.mean(gap * gap)))
    return float(np.mean(gaps))
