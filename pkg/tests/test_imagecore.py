"""Tests for image codecs, geometry and compositing."""

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import gradient_image, random_image
from lut_harmony.exceptions import (
    BoundsError,
    DimensionMismatchError,
    ImageDecodeError,
    UnsupportedFormatError,
)
from lut_harmony.imagecore import (
    composite,
    crop,
    decode_image,
    decode_mask,
    encode_image,
    encode_mask,
    luminance,
    read_image,
    resize_bilinear,
    resize_short_side,
    write_image,
)
from lut_harmony.models import ImageF32, Mask, Rect


def test_decode_ascii_ppm():
    """Test 1: A 1x1 P3 file decodes to byte/255."""
    image = decode_image(b"P3 1 1 255 255 0 0", "ppm")
    assert image.size == (1, 1)
    assert image.pixel(0, 0) == (1.0, 0.0, 0.0)


def test_decode_zero_ppm_and_gray_promotion():
    """Test 2: All-zero binary PPM, and gray PGM promoted to RGB."""
    image = decode_image(b"P6\n2 2\n255\n" + bytes(12), "ppm")
    assert np.all(image.data == 0.0)

    gray = decode_image(b"P5 2 1 255\n" + bytes([0, 255]), "ppm")
    assert gray.pixel(1, 0) == (1.0, 1.0, 1.0)
    assert gray.pixel(0, 0) == (0.0, 0.0, 0.0)


def test_decode_ppm_with_comments():
    """Test 3: Header comments are skipped."""
    image = decode_image(b"P3\n# made by hand\n1 1\n# depth\n255\n0 51 255\n", "ppm")
    assert image.pixel(0, 0) == pytest.approx((0.0, 0.2, 1.0))


@pytest.mark.parametrize("data, field", [
    (b"P6\n2 2\n255\n" + bytes(3), "pixels"),
    (b"P3 2 2 255 0 0 0", "pixels"),
    (b"P6\n2 2\n65535\n" + bytes(24), "maxval"),
    (b"P7\n1 1\n255\n" + bytes(3), "magic"),
    (b"P6\nx 2\n255\n", "width"),
])
def test_decode_errors_name_the_field(data, field):
    """Test 4: Malformed headers and truncated data raise errors naming the field."""
    with pytest.raises(ImageDecodeError) as excinfo:
        decode_image(data, "ppm")
    assert excinfo.value.field == field, f"expected field {field}, got {excinfo.value.field}"


def test_truncated_ppm_reports_offset():
    """Test 5: Truncation reports the byte offset where data ran out."""
    data = b"P6\n2 2\n255\n" + bytes(3)
    with pytest.raises(ImageDecodeError) as excinfo:
        decode_image(data, "ppm")
    assert excinfo.value.offset == len(data)


def test_encode_quantizes_and_clamps():
    """Test 6: Pixel (1, 0, 0) encodes to bytes 255, 0, 0; out-of-range values clamp."""
    data = encode_image(ImageF32.constant(1, 1, (1.0, 0.0, 0.0)), "ppm")
    assert data == b"P6\n1 1\n255\n" + bytes([255, 0, 0])

    rounded = encode_image(ImageF32.constant(1, 1, (0.3 / 255, 1.7 / 255, 2.0)), "ppm")
    assert rounded[-3:] == bytes([0, 2, 255])
    negative = encode_image(ImageF32.constant(1, 1, (-0.5, 0.6 / 255, 0.5)), "ppm")
    assert negative[-3:] == bytes([0, 1, 128])


@pytest.mark.parametrize("fmt", ["png8", "ppm"])
def test_encode_decode_within_half_step(fmt):
    """Test 7: decode(encode(x)) differs from x by at most 1/510 per channel."""
    image = random_image(17, 9, seed=4)
    restored = decode_image(encode_image(image, fmt), fmt)
    assert restored.size == image.size
    assert np.max(np.abs(restored.data - image.data)) <= 1.0 / 510 + 1e-7


@pytest.mark.parametrize("fmt", ["png8", "ppm"])
def test_decode_encode_is_idempotent(fmt):
    """Test 7b: Once quantized, an image survives further encode/decode passes unchanged."""
    once = decode_image(encode_image(random_image(13, 11, seed=8), fmt), fmt)
    twice = decode_image(encode_image(once, fmt), fmt)
    assert np.array_equal(twice.data, once.data)
    assert encode_image(twice, fmt) == encode_image(once, fmt)


def test_mask_codec_roundtrip():
    """Test 8: Masks survive the gray PNG codec within a half step."""
    rng = np.random.default_rng(0)
    mask = Mask(data=rng.uniform(size=(6, 5)))
    restored = decode_mask(encode_mask(mask))
    assert (restored.width, restored.height) == (5, 6)
    assert np.max(np.abs(restored.data - mask.data)) <= 1.0 / 510 + 1e-7


def test_read_write_by_extension(tmp_path):
    """Test 9: File helpers pick the codec from the extension."""
    image = random_image(8, 8, seed=1)
    for name in ("a.png", "a.ppm"):
        write_image(tmp_path / name, image)
        assert np.allclose(read_image(tmp_path / name).data, image.data, atol=1.0 / 510 + 1e-7)
    assert (tmp_path / "a.ppm").read_bytes().startswith(b"P6")
    with pytest.raises(UnsupportedFormatError):
        write_image(tmp_path / "a.jpg", image)


def test_image_rejects_non_finite():
    """Test 10: ImageF32 data must be finite and three-channel."""
    with pytest.raises(ValidationError):
        ImageF32(data=np.full((2, 2, 3), np.nan))
    with pytest.raises(ValidationError):
        ImageF32(data=np.zeros((2, 2, 4)))


def test_crop_copies_the_rect():
    """Test 11: Output pixel (i, j) equals input pixel (x+i, y+j)."""
    image = random_image(10, 8, seed=2)
    rect = Rect(x=3, y=2, w=4, h=5)
    out = crop(image, rect)
    assert out.size == (4, 5)
    assert out.pixel(1, 2) == image.pixel(4, 4)

    assert np.array_equal(crop(image, Rect(x=0, y=0, w=10, h=8)).data, image.data)


def test_crop_of_a_crop_is_one_composed_crop():
    """Test 11b: Cropping twice equals one crop with the inner rect moved into the outer frame."""
    image = random_image(20, 16, seed=6)
    outer = Rect(x=4, y=3, w=12, h=10)
    inner = Rect(x=2, y=5, w=7, h=4)
    composed = outer.within(inner)
    assert composed == Rect(x=6, y=8, w=7, h=4)
    assert np.array_equal(crop(crop(image, outer), inner).data, crop(image, composed).data)


def test_crop_out_of_bounds():
    """Test 12: A rect leaving the image raises BoundsError."""
    with pytest.raises(BoundsError):
        crop(random_image(4, 4, seed=0), Rect(x=2, y=0, w=3, h=2))


def test_resize_identity_and_constants():
    """Test 13: Same-size resize is the identity; constant images stay constant."""
    image = random_image(6, 5, seed=3)
    assert np.array_equal(resize_bilinear(image, 6, 5).data, image.data)

    constant = ImageF32.constant(7, 3, (0.2, 0.4, 0.6))
    resized = resize_bilinear(constant, 13, 11)
    assert resized.size == (13, 11)
    assert np.allclose(resized.data, [0.2, 0.4, 0.6], atol=1e-6)


def test_resize_preserves_mean_of_linear_ramp():
    """Test 14: Half-pixel sampling keeps a horizontal ramp centered."""
    ramp = np.linspace(0.0, 1.0, 16, dtype=np.float32)
    image = ImageF32(data=np.repeat(np.tile(ramp, (4, 1))[..., None], 3, axis=2))
    down = resize_bilinear(image, 8, 4)
    assert abs(float(down.data.mean()) - float(image.data.mean())) < 1e-6


def test_resize_upsamples_on_half_pixel_centers():
    """Test 14b: Two pixels stretched to four land at the quarter points with clamped ends."""
    image = ImageF32(data=np.array([[[0.2, 0.2, 0.2], [0.6, 0.6, 0.6]]]))
    out = resize_bilinear(image, 4, 1)
    assert out.size == (4, 1)
    assert np.allclose(out.data[0, :, 0], [0.2, 0.3, 0.5, 0.6], atol=1e-6)


def test_resize_short_side():
    """Test 15: The short side hits the target and the aspect ratio is kept."""
    out = resize_short_side(gradient_image(96, 64, seed=0), 32)
    assert out.size == (48, 32)


def test_composite_mask_extremes():
    """Test 16: Mask 0 returns bg bit-for-bit; mask 1 pastes fg inside the placement."""
    bg = random_image(12, 10, seed=5)
    fg = random_image(4, 3, seed=6)
    placement = Rect(x=5, y=4, w=4, h=3)

    out = composite(fg, bg, Mask.filled(4, 3, 0.0), placement)
    assert np.array_equal(out.data, bg.data)

    out = composite(fg, bg, Mask.filled(4, 3, 1.0), placement)
    assert np.array_equal(crop(out, placement).data, fg.data)
    outside = np.ones((10, 12), dtype=bool)
    outside[4:7, 5:9] = False
    assert np.array_equal(out.data[outside], bg.data[outside])


def test_composite_soft_blend():
    """Test 17: Half alpha averages fg and bg."""
    bg = ImageF32.constant(4, 4, (0.0, 0.0, 0.0))
    fg = ImageF32.constant(2, 2, (1.0, 0.5, 0.25))
    out = composite(fg, bg, Mask.filled(2, 2, 0.5), Rect(x=1, y=1, w=2, h=2))
    assert out.pixel(1, 1) == pytest.approx((0.5, 0.25, 0.125))
    assert out.pixel(0, 0) == (0.0, 0.0, 0.0)


def test_composite_dimension_errors():
    """Test 18: Size mismatches and out-of-bounds placements are rejected."""
    bg = random_image(8, 8, seed=0)
    fg = random_image(3, 3, seed=1)
    with pytest.raises(DimensionMismatchError):
        composite(fg, bg, Mask.filled(3, 3, 1.0), Rect(x=0, y=0, w=4, h=3))
    with pytest.raises(DimensionMismatchError):
        composite(fg, bg, Mask.filled(2, 3, 1.0), Rect(x=0, y=0, w=3, h=3))
    with pytest.raises(BoundsError):
        composite(fg, bg, Mask.filled(3, 3, 1.0), Rect(x=6, y=0, w=3, h=3))


def test_luminance_weights():
    """Test 19: Rec.601 luma of pure primaries."""
    image = ImageF32(data=np.eye(3, dtype=np.float32).reshape(1, 3, 3))
    assert luminance(image)[0] == pytest.approx([0.299, 0.587, 0.114])
