"""Image codecs, geometry and alpha compositing."""

import io
import logging
import re
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from lut_harmony.config import config
from lut_harmony.exceptions import DimensionMismatchError, ImageDecodeError, UnsupportedFormatError
from lut_harmony.models.enums import REC601_WEIGHTS, ImageFormat
from lut_harmony.models.image import ImageF32, Mask, Rect
from lut_harmony.utils import write_bytes

logger = logging.getLogger(__name__)

_PPM_MAGICS = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}
_WHITESPACE = b" \t\r\n\v\f"
_ASCII_TOKEN = re.compile(rb"#[^\n]*|\S+")
_PILLOW_8BIT_MODES = {"1", "L", "LA", "P", "PA", "RGB", "RGBA", "RGBX", "CMYK", "YCbCr"}


def decode_image(data: bytes, fmt: Union[ImageFormat, str] = ImageFormat.PNG8) -> ImageF32:
    """Decode an 8-bit RGB or gray file; values become byte/255 exactly."""
    fmt = ImageFormat(fmt)
    if fmt == ImageFormat.PPM:
        pixels = _decode_ppm(data)
    else:
        pixels = _decode_png(data)
    return ImageF32(data=pixels.astype(np.float32) / np.float32(255.0))


def encode_image(image: ImageF32, fmt: Union[ImageFormat, str] = ImageFormat.PNG8) -> bytes:
    """Quantize with round-half-up, round(clamp(v, 0, 1) * 255), and serialize."""
    fmt = ImageFormat(fmt)
    quantized = quantize(image.data)
    if fmt == ImageFormat.PPM:
        header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
        return header + quantized.tobytes()
    buffer = io.BytesIO()
    Image.fromarray(quantized).save(
        buffer, format="PNG", compress_level=config.png_compress_level
    )
    return buffer.getvalue()


def quantize(values: np.ndarray) -> np.ndarray:
    scaled = np.clip(values.astype(np.float64), 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def encode_mask(mask: Mask) -> bytes:
    """Serialize a mask as an 8-bit gray PNG."""
    buffer = io.BytesIO()
    Image.fromarray(quantize(mask.data)).save(
        buffer, format="PNG", compress_level=config.png_compress_level
    )
    return buffer.getvalue()


def decode_mask(data: bytes) -> Mask:
    gray = _decode_png(data)[..., 0]
    return Mask(data=gray.astype(np.float32) / np.float32(255.0))


def format_for_path(path: Union[str, Path]) -> ImageFormat:
    suffix = Path(path).suffix.lower()
    if suffix in (".ppm", ".pnm", ".pgm"):
        return ImageFormat.PPM
    if suffix == ".png":
        return ImageFormat.PNG8
    raise UnsupportedFormatError(f"Unsupported image extension: {suffix!r} (expected .png or .ppm)")


def read_image(path: Union[str, Path]) -> ImageF32:
    path = Path(path)
    image = decode_image(path.read_bytes(), format_for_path(path))
    logger.debug("Read %s from %s", image, path)
    return image


def write_image(path: Union[str, Path], image: ImageF32) -> None:
    write_bytes(path, encode_image(image, format_for_path(path)))


def crop(image: ImageF32, rect: Rect) -> ImageF32:
    """Copy out rect; output pixel (i, j) is input pixel (x + i, y + j)."""
    rect.require_within(image.width, image.height)
    rows, cols = rect.slices()
    return ImageF32(data=image.data[rows, cols])


def _bilinear_axis(src: int, dst: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centers: source = (dst + 0.5) * scale - 0.5, clamped to the edge samples
    scale = src / dst
    coord = np.clip((np.arange(dst, dtype=np.float64) + 0.5) * scale - 0.5, 0.0, src - 1)
    lo = np.floor(coord).astype(np.intp)
    hi = np.minimum(lo + 1, src - 1)
    return lo, hi, coord - lo


def resize_bilinear(image: ImageF32, new_w: int, new_h: int) -> ImageF32:
    """Bilinear resize with half-pixel-centered sampling; same size is the identity."""
    if new_w < 1 or new_h < 1:
        raise ValueError(f"Target size must be at least 1x1, got {new_w}x{new_h}")
    if (new_w, new_h) == image.size:
        return image

    src = image.data.astype(np.float64)
    y0, y1, fy = _bilinear_axis(image.height, new_h)
    x0, x1, fx = _bilinear_axis(image.width, new_w)

    fy = fy[:, None, None]
    rows = src[y0] * (1.0 - fy) + src[y1] * fy
    fx = fx[None, :, None]
    out = rows[:, x0] * (1.0 - fx) + rows[:, x1] * fx
    return ImageF32(data=np.clip(out, 0.0, 1.0))


def resize_short_side(image: ImageF32, short_side: int) -> ImageF32:
    """Resize so the shorter side equals short_side, preserving aspect ratio."""
    w, h = image.size
    if w <= h:
        new_w, new_h = short_side, max(1, int(round(h * short_side / w)))
    else:
        new_w, new_h = max(1, int(round(w * short_side / h))), short_side
    return resize_bilinear(image, new_w, new_h)


def composite(fg: ImageF32, bg: ImageF32, mask: Mask, placement: Rect) -> ImageF32:
    """Alpha-blend fg over bg inside placement: m*fg + (1-m)*bg per pixel and channel."""
    extent = (placement.w, placement.h)
    if fg.size != extent:
        raise DimensionMismatchError(f"foreground is {fg.size}, placement extent is {extent}")
    if (mask.width, mask.height) != extent:
        raise DimensionMismatchError(
            f"mask is {(mask.width, mask.height)}, placement extent is {extent}"
        )
    placement.require_within(bg.width, bg.height)

    rows, cols = placement.slices()
    out = np.array(bg.data, copy=True)
    m = mask.data.astype(np.float64)[..., None]
    region = bg.data[rows, cols].astype(np.float64)
    out[rows, cols] = m * fg.data.astype(np.float64) + (1.0 - m) * region
    return ImageF32(data=out)


def luminance(image: ImageF32) -> np.ndarray:
    """Rec.601 luma as a (height, width) float64 array."""
    return image.data.astype(np.float64) @ np.asarray(REC601_WEIGHTS, dtype=np.float64)


def _decode_png(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            if img.mode not in _PILLOW_8BIT_MODES:
                raise ImageDecodeError(
                    f"unsupported bit depth or mode {img.mode!r}; only 8-bit images",
                    field="mode",
                )
            rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except ImageDecodeError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as e:
        raise ImageDecodeError(f"cannot decode PNG data: {e}", field="png") from e
    return rgb


def _skip_separators(data: bytes, pos: int) -> int:
    while pos < len(data):
        char = data[pos:pos + 1]
        if char == b"#":
            newline = data.find(b"\n", pos)
            pos = len(data) if newline < 0 else newline + 1
        elif char in _WHITESPACE:
            pos += 1
        else:
            break
    return pos


def _read_header_int(data: bytes, pos: int, field: str) -> Tuple[int, int]:
    pos = _skip_separators(data, pos)
    start = pos
    while pos < len(data) and data[pos:pos + 1].isdigit():
        pos += 1
    if start == pos:
        raise ImageDecodeError("expected a decimal integer", offset=start, field=field)
    return int(data[start:pos]), pos


def _decode_ppm(data: bytes) -> np.ndarray:
    magic = data[:2]
    if magic not in _PPM_MAGICS:
        raise ImageDecodeError(f"unsupported magic {magic!r}", offset=0, field="magic")
    channels, binary = _PPM_MAGICS[magic]

    width, pos = _read_header_int(data, 2, "width")
    height, pos = _read_header_int(data, pos, "height")
    maxval, pos = _read_header_int(data, pos, "maxval")
    if width < 1:
        raise ImageDecodeError("width must be at least 1", field="width")
    if height < 1:
        raise ImageDecodeError("height must be at least 1", field="height")
    if maxval != 255:
        raise ImageDecodeError(
            f"unsupported bit depth: maxval {maxval}, only 255 is supported", field="maxval"
        )

    count = width * height * channels
    if binary:
        if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
            raise ImageDecodeError("missing separator after header", offset=pos, field="maxval")
        start = pos + 1
        payload = data[start:start + count]
        if len(payload) < count:
            raise ImageDecodeError(
                f"truncated pixel data: expected {count} bytes, found {len(payload)}",
                offset=start + len(payload),
                field="pixels",
            )
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        values = np.empty(count, dtype=np.uint8)
        filled = 0
        for match in _ASCII_TOKEN.finditer(data, pos):
            token = match.group()
            if token.startswith(b"#"):
                continue
            if filled == count:
                break
            if not token.isdigit() or int(token) > maxval:
                raise ImageDecodeError(
                    f"invalid sample {token!r}", offset=match.start(), field="pixels"
                )
            values[filled] = int(token)
            filled += 1
        if filled < count:
            raise ImageDecodeError(
                f"truncated pixel data: expected {count} samples, found {filled}",
                offset=len(data),
                field="pixels",
            )

    pixels = values.reshape(height, width, channels)
    if channels == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    return pixels
