"""3D LUT parsing, serialization, trilinear application and synthesis."""

import logging
import math
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from lut_harmony.config import config
from lut_harmony.exceptions import CubeParseError, LutValidationError
from lut_harmony.models.image import ImageF32
from lut_harmony.models.lut import MAX_LUT_SIZE, MIN_LUT_SIZE, RGB, Lut3d
from lut_harmony.utils import mix_seed, sha256_hex, validate_unit_interval

logger = logging.getLogger(__name__)

_KEYWORD = re.compile(r"^[A-Z][A-Z0-9_]*$")
_TITLE = re.compile(r'^TITLE\s+"([^"]*)"\s*$')
_TONE_KNOTS = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
_TONE_SPREAD = 0.15
_MIX_SPREAD = 0.3


def _check_size(n: int) -> int:
    if not MIN_LUT_SIZE <= n <= MAX_LUT_SIZE:
        raise LutValidationError(
            f"LUT size {n} outside [{MIN_LUT_SIZE}, {MAX_LUT_SIZE}]"
        )
    return n


def _parse_floats(tokens: Sequence[str], lineno: int, what: str) -> Tuple[float, ...]:
    values = []
    for token in tokens:
        try:
            value = float(token)
        except ValueError:
            raise CubeParseError(lineno, f"non-numeric token {token!r} in {what}") from None
        if not math.isfinite(value):
            raise CubeParseError(lineno, f"non-finite value {token!r} in {what}")
        values.append(value)
    return tuple(values)


def parse_cube(text: str) -> Lut3d:
    """Parse .cube text (LF or CRLF). Every error names the offending line."""
    lines = text.replace("\r\n", "\n").split("\n")

    size: Optional[int] = None
    title: Optional[str] = None
    domain: dict = {}
    domain_lines: dict = {}
    rows: List[Tuple[float, ...]] = []
    last_content_line = 0

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        last_content_line = lineno
        tokens = line.split()
        keyword = tokens[0]

        if _KEYWORD.match(keyword):
            if rows:
                raise CubeParseError(lineno, f"keyword {keyword} after data lines")
            if keyword == "TITLE":
                match = _TITLE.match(line)
                if title is not None:
                    raise CubeParseError(lineno, "duplicate TITLE")
                if not match:
                    raise CubeParseError(lineno, 'TITLE must be followed by a "quoted" string')
                title = match.group(1)
            elif keyword == "LUT_3D_SIZE":
                if size is not None:
                    raise CubeParseError(lineno, "duplicate LUT_3D_SIZE")
                if len(tokens) != 2 or not re.fullmatch(r"[0-9]+", tokens[1]):
                    raise CubeParseError(lineno, "LUT_3D_SIZE needs one integer")
                size = int(tokens[1])
                if not MIN_LUT_SIZE <= size <= MAX_LUT_SIZE:
                    raise CubeParseError(
                        lineno, f"LUT_3D_SIZE {size} outside [{MIN_LUT_SIZE}, {MAX_LUT_SIZE}]"
                    )
            elif keyword in ("DOMAIN_MIN", "DOMAIN_MAX"):
                if keyword in domain:
                    raise CubeParseError(lineno, f"duplicate {keyword}")
                if len(tokens) != 4:
                    raise CubeParseError(lineno, f"{keyword} needs three values")
                domain[keyword] = _parse_floats(tokens[1:], lineno, keyword)
                domain_lines[keyword] = lineno
            elif keyword == "LUT_1D_SIZE":
                raise CubeParseError(lineno, "1D LUTs are not supported")
            else:
                raise CubeParseError(lineno, f"unknown keyword {keyword}")
            continue

        if size is None:
            raise CubeParseError(lineno, "data line before LUT_3D_SIZE")
        if len(tokens) != 3:
            raise CubeParseError(lineno, f"data line needs three values, got {len(tokens)}")
        if len(rows) == size ** 3:
            raise CubeParseError(lineno, f"too many data lines: expected {size ** 3}")
        rows.append(_parse_floats(tokens, lineno, "data line"))

    end_line = last_content_line + 1
    if size is None:
        raise CubeParseError(end_line, "missing LUT_3D_SIZE")
    if len(rows) != size ** 3:
        raise CubeParseError(
            end_line, f"expected {size ** 3} data lines, found {len(rows)}"
        )

    domain_min = domain.get("DOMAIN_MIN", (0.0, 0.0, 0.0))
    domain_max = domain.get("DOMAIN_MAX", (1.0, 1.0, 1.0))
    if any(lo >= hi for lo, hi in zip(domain_min, domain_max)):
        raise CubeParseError(
            max(domain_lines.values()), f"DOMAIN_MIN {domain_min} must be below DOMAIN_MAX {domain_max}"
        )

    lut = Lut3d(
        size=size,
        table=np.asarray(rows, dtype=np.float64),
        domain_min=domain_min,
        domain_max=domain_max,
        title=title,
    )
    logger.debug("Parsed %s", lut)
    return lut


def write_cube(lut: Lut3d) -> str:
    """Canonical .cube text: 6 fractional digits, LF endings, default domain omitted."""
    lines = []
    if lut.title:
        lines.append(f'TITLE "{lut.title}"')
    lines.append(f"LUT_3D_SIZE {lut.size}")
    if not lut.has_default_domain:
        lines.append("DOMAIN_MIN {:.6f} {:.6f} {:.6f}".format(*lut.domain_min))
        lines.append("DOMAIN_MAX {:.6f} {:.6f} {:.6f}".format(*lut.domain_max))
    lines.extend(f"{r:.6f} {g:.6f} {b:.6f}" for r, g, b in lut.table.tolist())
    return "\n".join(lines) + "\n"


def read_cube(path: Union[str, Path]) -> Lut3d:
    return parse_cube(Path(path).read_text(encoding="utf-8"))


def save_cube(path: Union[str, Path], lut: Lut3d) -> None:
    Path(path).write_text(write_cube(lut), encoding="utf-8", newline="\n")
    logger.info("Wrote %s to %s", lut, path)


def lut_id(lut: Lut3d) -> str:
    """The LUT's title, or a short fingerprint of its canonical text."""
    if lut.title:
        return lut.title
    return sha256_hex(write_cube(lut).encode("utf-8"))[:12]


def _lattice_coordinates(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # flat index r + n*g + n*n*b, so b is the slowest axis
    b, g, r = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    return r.ravel(), g.ravel(), b.ravel()


def identity_lut(n: int) -> Lut3d:
    """Entry (r, g, b) = (r, g, b) / (n - 1)."""
    _check_size(n)
    r, g, b = _lattice_coordinates(n)
    table = np.stack([r, g, b], axis=1).astype(np.float64) / (n - 1)
    return Lut3d(size=n, table=table)


def apply_lut_pixels(lut: Lut3d, pixels: np.ndarray) -> np.ndarray:
    """Trilinear lookup of a (P, 3) array of colors; returns (P, 3) float64, unclamped."""
    n = lut.size
    dmin = np.asarray(lut.domain_min, dtype=np.float64)
    dmax = np.asarray(lut.domain_max, dtype=np.float64)
    u = np.clip((np.asarray(pixels, dtype=np.float64) - dmin) / (dmax - dmin), 0.0, 1.0) * (n - 1)

    # lower corner capped at n-2 so the upper corner always exists; frac then reaches 1.0
    lo = np.minimum(np.floor(u).astype(np.intp), n - 2)
    frac = u - lo
    r0, g0, b0 = lo[:, 0], lo[:, 1], lo[:, 2]
    fr, fg, fb = frac[:, 0:1], frac[:, 1:2], frac[:, 2:3]
    lat = lut.lattice()

    c00 = lat[b0, g0, r0] * (1.0 - fr) + lat[b0, g0, r0 + 1] * fr
    c01 = lat[b0, g0 + 1, r0] * (1.0 - fr) + lat[b0, g0 + 1, r0 + 1] * fr
    c10 = lat[b0 + 1, g0, r0] * (1.0 - fr) + lat[b0 + 1, g0, r0 + 1] * fr
    c11 = lat[b0 + 1, g0 + 1, r0] * (1.0 - fr) + lat[b0 + 1, g0 + 1, r0 + 1] * fr
    c0 = c00 * (1.0 - fg) + c01 * fg
    c1 = c10 * (1.0 - fg) + c11 * fg
    return c0 * (1.0 - fb) + c1 * fb


def apply_lut(lut: Lut3d, color: Sequence[float]) -> RGB:
    """Map one RGB color; inputs outside the domain are clamped to it first."""
    out = apply_lut_pixels(lut, np.asarray(color, dtype=np.float64).reshape(1, 3))[0]
    return float(out[0]), float(out[1]), float(out[2])


def apply_lut_image(lut: Lut3d, image: ImageF32) -> ImageF32:
    out = apply_lut_pixels(lut, image.data.reshape(-1, 3))
    return ImageF32(data=np.clip(out, 0.0, 1.0).reshape(image.data.shape))


def random_smooth_lut(
        seed: int,
        strength: float,
        size: Optional[int] = None,
        mixing: bool = True
) -> Lut3d:
    """
    Synthesize a smooth LUT deterministically from seed.

    Identity lattice -> per-channel monotone tone curves (PCHIP through 4 knots) ->
    3x3 color mixing within strength*0.3 of identity -> clamp to [0, 1].
    Strength 0 returns the identity exactly.
    """
    validate_unit_interval(strength, "strength")
    n = _check_size(size or config.default_lut_size)
    if strength == 0.0:
        return identity_lut(n)

    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, n)
    curves = []
    for _ in range(3):
        # knot spacing 1/3 exceeds the largest two-sided offset 0.3, so knots stay increasing
        offsets = rng.uniform(-_TONE_SPREAD, _TONE_SPREAD, size=4) * strength
        knots = np.clip(_TONE_KNOTS + offsets, 0.0, 1.0)
        curves.append(PchipInterpolator(_TONE_KNOTS, knots)(grid))
    deviation = rng.uniform(-1.0, 1.0, size=(3, 3)) * strength * _MIX_SPREAD
    matrix = np.eye(3) + deviation if mixing else np.eye(3)

    r, g, b = _lattice_coordinates(n)
    toned = np.stack([curves[0][r], curves[1][g], curves[2][b]], axis=1)
    table = np.clip(toned @ matrix.T, 0.0, 1.0)
    return Lut3d(size=n, table=table)


def generate_bank(
        count: int,
        seed: int,
        strength: float,
        size: Optional[int] = None,
        prefix: str = "lut"
) -> List[Lut3d]:
    """Generate `count` titled synthetic LUTs; LUT i is seeded with mix_seed(seed, i)."""
    bank = [
        random_smooth_lut(mix_seed(seed, i), strength, size).model_copy(
            update={"title": f"{prefix}_{i:03d}"}
        )
        for i in range(count)
    ]
    logger.info("Generated bank of %d LUTs (seed=%d, strength=%.2f)", count, seed, strength)
    return bank
