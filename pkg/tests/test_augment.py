"""Tests for crop-pair sampling, triplet generation and dataset generation."""

import json

import numpy as np
import pytest

from conftest import gradient_image
from lut_harmony.appearance import (
    ChannelStats,
    ColorTransferAppearance,
    SaturationAppearance,
    color_transfer_meanstd,
    saturation_jitter,
)
from lut_harmony.augment import (
    draw_lut_pair,
    gen_dataset,
    gen_triplet,
    generate_batch,
    generate_sample,
    sample_crop_pair,
)
from lut_harmony.config import config
from lut_harmony.dataset import read_manifest
from lut_harmony.exceptions import GenerationError
from lut_harmony.imagecore import crop, resize_short_side
from lut_harmony.lut import apply_lut_image, identity_lut, lut_id
from lut_harmony.models import AppearanceMode, AugmentConfig, CropMode, Rect


def test_crop_pair_respects_overlap_window(tiny_augment):
    """Test 1: Every multi-crop pair satisfies the overlap window and the offset rule."""
    image = gradient_image(96, 80, seed=1)
    for seed in range(50):
        content, reference, resized = sample_crop_pair(image, seed, tiny_augment)
        assert tiny_augment.jitter_min <= min(resized.size) <= tiny_augment.jitter_max
        for rect in (content, reference):
            assert (rect.w, rect.h) == (32, 32)
            assert rect.fits(resized.width, resized.height)
        ratio = content.intersection_area(reference) / content.area
        assert 0.2 <= ratio <= 0.9, f"overlap {ratio} outside window"
        assert abs(content.x - reference.x) >= 2 or abs(content.y - reference.y) >= 2


def test_single_crop_returns_one_rect(tiny_augment):
    """Test 2: single_crop mode uses the same rect for content and reference."""
    cfg = tiny_augment.model_copy(update={"mode": CropMode.SINGLE_CROP})
    content, reference, _ = sample_crop_pair(gradient_image(80, 80, seed=2), 5, cfg)
    assert content == reference


def test_crop_pair_is_deterministic(tiny_augment):
    """Test 3: The same seed gives the same rects and jitter."""
    image = gradient_image(90, 70, seed=3)
    first = sample_crop_pair(image, 42, tiny_augment)
    second = sample_crop_pair(image, 42, tiny_augment)
    assert first[0] == second[0] and first[1] == second[1]
    assert np.array_equal(first[2].data, second[2].data)


def test_crop_pair_rejects_small_images(tiny_augment):
    """Test 4: Sources with a short side below 64 are rejected."""
    with pytest.raises(GenerationError):
        sample_crop_pair(gradient_image(200, 63, seed=0), 1, tiny_augment)


def test_crop_pair_degenerate_geometry_fails_fast():
    """Test 5: An unsatisfiable overlap window exhausts the draw budget with an error."""
    config.update(max_rejection_draws=50)
    cfg = AugmentConfig(jitter_min=32, jitter_max=32, crop_size=32, overlap_min=0.2,
                        overlap_max=0.5, min_offset=0)
    with pytest.raises(GenerationError):
        sample_crop_pair(gradient_image(64, 64, seed=0), 3, cfg)


def test_gen_triplet_applies_luts_to_shared_crops(small_bank, tiny_augment):
    """Test 6: C_a/C_b share the content crop and R_a/R_b the reference crop."""
    image = gradient_image(96, 80, seed=4)
    lut_a, lut_b = small_bank[0], small_bank[1]
    triplet = gen_triplet(image, lut_a, lut_b, seed=9, cfg=tiny_augment, image_id="four")

    prov = triplet.provenance
    assert prov.image_id == "four"
    assert (prov.lut_a, prov.lut_b) == (lut_id(lut_a), lut_id(lut_b))
    resized = resize_short_side(image, prov.jitter_size)
    content = crop(resized, prov.content_rect)
    reference = crop(resized, prov.reference_rect)
    assert np.array_equal(triplet.content_a.data, apply_lut_image(lut_a, content).data)
    assert np.array_equal(triplet.content_b.data, apply_lut_image(lut_b, content).data)
    assert np.array_equal(triplet.ref_a.data, apply_lut_image(lut_a, reference).data)
    assert np.array_equal(triplet.ref_b.data, apply_lut_image(lut_b, reference).data)


def test_gen_triplet_rejects_identical_luts(small_bank, tiny_augment):
    """Test 7: The same LUT twice is an error unless explicitly allowed."""
    image = gradient_image(96, 80, seed=5)
    with pytest.raises(GenerationError):
        gen_triplet(image, small_bank[0], small_bank[0], seed=1, cfg=tiny_augment)
    triplet = gen_triplet(image, small_bank[0], small_bank[0], seed=1, cfg=tiny_augment,
                          allow_same=True)
    assert np.array_equal(triplet.content_a.data, triplet.content_b.data)


def test_gen_triplet_identity_luts_reproduce_crops(tiny_augment):
    """Test 8: Identity appearances leave the crops unchanged."""
    image = gradient_image(96, 80, seed=6)
    ident = identity_lut(9)
    other = ident.model_copy(update={"title": "identity_b"})
    triplet = gen_triplet(image, ident, other, seed=3, cfg=tiny_augment)
    assert np.max(np.abs(triplet.content_a.data - triplet.content_b.data)) <= 1e-6
    assert np.max(np.abs(triplet.ref_a.data - triplet.ref_b.data)) <= 1e-6


def test_draw_lut_pair_is_ordered_and_distinct():
    """Test 9: Pairs never repeat an index and cover both orders."""
    rng = np.random.default_rng(0)
    pairs = {draw_lut_pair(rng, 3) for _ in range(200)}
    assert all(a != b for a, b in pairs)
    assert (0, 1) in pairs and (1, 0) in pairs


@pytest.mark.parametrize("workers", [2, 4, 8])
def test_generate_batch_independent_of_workers(small_corpus, small_bank, tiny_augment, workers):
    """Test 10: Sample i depends only on (master seed, i), not on worker count."""
    serial = generate_batch(small_corpus, small_bank, 3, 10, 17, tiny_augment, workers=1)
    parallel = generate_batch(small_corpus, small_bank, 3, 10, 17, tiny_augment, workers=workers)
    for a, b in zip(serial, parallel):
        assert a.provenance == b.provenance
        assert np.array_equal(a.content_a.data, b.content_a.data)
        assert np.array_equal(a.ref_b.data, b.ref_b.data)

    single = generate_sample(small_corpus, small_bank, 5, 17, tiny_augment)
    assert single.provenance == serial[2].provenance


def _shared_window(triplet):
    """Pixels of the content/reference overlap, cut from each crop of the triplet."""
    c, r = triplet.provenance.content_rect, triplet.provenance.reference_rect
    x0, y0 = max(c.x, r.x), max(c.y, r.y)
    x1, y1 = min(c.x + c.w, r.x + r.w), min(c.y + c.h, r.y + r.h)
    in_content = (slice(y0 - c.y, y1 - c.y), slice(x0 - c.x, x1 - c.x))
    in_reference = (slice(y0 - r.y, y1 - r.y), slice(x0 - r.x, x1 - r.x))
    return in_content, in_reference


def test_content_and_reference_share_an_appearance(small_corpus, small_bank, tiny_augment):
    """Test 10b: Over 500 samples C_a agrees with R_a and C_b with R_b wherever the crops overlap."""
    batch = generate_batch(small_corpus, small_bank, 0, 500, 23, tiny_augment)
    for triplet in batch:
        assert triplet.provenance.lut_a != triplet.provenance.lut_b
        in_content, in_reference = _shared_window(triplet)
        assert np.allclose(triplet.content_a.data[in_content], triplet.ref_a.data[in_reference],
                           atol=1e-6)
        assert np.allclose(triplet.content_b.data[in_content], triplet.ref_b.data[in_reference],
                           atol=1e-6)


def test_same_lut_draws_need_allow_same(small_bank, tiny_augment):
    """Test 10c: Every LUT paired with itself is refused, and allowed only on request."""
    image = gradient_image(96, 80, seed=12)
    for seed in range(125):
        lut = small_bank[seed % len(small_bank)]
        with pytest.raises(GenerationError):
            gen_triplet(image, lut, lut, seed=seed, cfg=tiny_augment)
    for seed in range(4):
        triplet = gen_triplet(image, small_bank[seed], small_bank[seed], seed=seed, cfg=tiny_augment,
                              allow_same=True)
        assert np.array_equal(triplet.ref_a.data, triplet.ref_b.data)


def test_generate_batch_requires_two_luts(small_corpus, small_bank, tiny_augment):
    """Test 11: Ordered distinct pairs need at least two LUTs; corpora must be non-empty."""
    with pytest.raises(GenerationError):
        generate_batch(small_corpus, small_bank[:1], 0, 1, 0, tiny_augment)
    with pytest.raises(GenerationError):
        generate_batch([], small_bank, 0, 1, 0, tiny_augment)


@pytest.mark.parametrize("mode, prefix", [
    (AppearanceMode.COLOR_TRANSFER, "colortransfer:"),
    (AppearanceMode.SATURATION, "saturation:"),
])
def test_photometric_appearance_modes(small_corpus, tiny_augment, mode, prefix):
    """Test 12: Ablation appearance modes need no LUT bank and record their parameters."""
    cfg = tiny_augment.model_copy(update={"appearance": mode})
    batch = generate_batch(small_corpus, [], 0, 3, 8, cfg)
    for triplet in batch:
        assert triplet.provenance.lut_a.startswith(prefix)
        assert triplet.provenance.lut_a != triplet.provenance.lut_b
        assert triplet.content_a.size == (32, 32)


def test_color_transfer_matches_target_statistics():
    """Test 13: Mean/std transfer reaches the target when nothing clips."""
    src = gradient_image(40, 30, seed=7, noise=0.02)
    target = ChannelStats(mean=(0.5, 0.45, 0.55), std=(0.05, 0.04, 0.06))
    out = ChannelStats.of(color_transfer_meanstd(src, target))
    assert out.mean == pytest.approx(target.mean, abs=1e-5)
    assert out.std == pytest.approx(target.std, abs=1e-5)


def test_color_transfer_appearance_uses_whole_image_stats():
    """Test 14: Both crops receive one global map derived from the source image."""
    image = gradient_image(64, 64, seed=8)
    appearance = ColorTransferAppearance.random(np.random.default_rng(1), image)
    assert appearance.source == ChannelStats.of(image)
    left = crop(image, Rect(x=0, y=0, w=16, h=16))
    mapped = appearance.apply(left)
    expected = color_transfer_meanstd(left, appearance.target, source=appearance.source)
    assert np.allclose(mapped.data, expected.data, atol=1e-6)


def test_saturation_jitter_extremes():
    """Test 15: Factor 0 gives Rec.601 gray, factor 1 is the identity."""
    image = gradient_image(20, 10, seed=9)
    gray = saturation_jitter(image, 0.0)
    assert np.allclose(gray.data[..., 0], gray.data[..., 1], atol=1e-6)
    assert np.allclose(gray.data[..., 1], gray.data[..., 2], atol=1e-6)
    assert np.allclose(saturation_jitter(image, 1.0).data, image.data, atol=1e-6)
    with pytest.raises(ValueError):
        saturation_jitter(image, -0.1)
    assert SaturationAppearance(factor=1.0).apply(image).size == image.size


def test_gen_dataset_layout_and_replay(tmp_path, small_bank, tiny_augment):
    """Test 16: 4 samples give 16 PNGs plus a manifest whose hash replays for any workers."""
    corpus = [gradient_image(80, 72, seed=10), gradient_image(72, 96, seed=11)]
    bank = small_bank[:2]

    first = gen_dataset(corpus, bank, 4, 123, tiny_augment, tmp_path / "a", workers=1)
    again = gen_dataset(corpus, bank, 4, 123, tiny_augment, tmp_path / "b", workers=1)
    parallel = gen_dataset(corpus, bank, 4, 123, tiny_augment, tmp_path / "c", workers=8)

    pngs = sorted(p.name for p in (tmp_path / "a").glob("*.png"))
    assert len(pngs) == 16
    assert pngs[:4] == ["000000_ca.png", "000000_cb.png", "000000_ra.png", "000000_rb.png"]
    assert (tmp_path / "a" / "manifest.json").exists()

    assert first.digest() == again.digest() == parallel.digest()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "c" / "manifest.json").read_bytes()
    assert read_manifest(tmp_path / "a") == first

    data = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert [s["index"] for s in data["samples"]] == [0, 1, 2, 3]
    assert data["corpus"] == ["img_0000", "img_0001"]


def test_gen_dataset_bank_of_one_fails_without_output(tmp_path, small_bank, tiny_augment):
    """Test 17: A single-LUT bank is rejected before anything is written."""
    with pytest.raises(GenerationError):
        gen_dataset([gradient_image(80, 80, seed=0)], small_bank[:1], 2, 0, tiny_augment,
                    tmp_path / "out")
    assert not (tmp_path / "out").exists()
