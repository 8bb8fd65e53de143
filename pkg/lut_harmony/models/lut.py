"""3D color lookup table model."""

import logging
from typing import Any, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

RGB = Tuple[float, float, float]

MIN_LUT_SIZE = 2
MAX_LUT_SIZE = 256


class Lut3d(BaseModel):
    """
    Lattice color transform with N^3 RGB entries.

    The table is stored flat in .cube order: red varies fastest, so the entry for
    lattice coordinate (r, g, b) lives at index r + N*g + N*N*b.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    size: int = Field(..., ge=MIN_LUT_SIZE, le=MAX_LUT_SIZE)
    table: np.ndarray
    domain_min: RGB = (0.0, 0.0, 0.0)
    domain_max: RGB = (1.0, 1.0, 1.0)
    title: Optional[str] = None

    @field_validator("table", mode="before")
    @classmethod
    def validate_table(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"LUT table must have shape (N^3, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("LUT table contains non-finite entries")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_consistency(self) -> "Lut3d":
        expected = self.size ** 3
        if self.table.shape[0] != expected:
            raise ValueError(
                f"LUT of size {self.size} needs {expected} entries, got {self.table.shape[0]}"
            )
        for channel, (lo, hi) in enumerate(zip(self.domain_min, self.domain_max)):
            if not lo < hi:
                raise ValueError(
                    f"domain_min must be below domain_max on channel {channel}: {lo} >= {hi}"
                )
        return self

    @property
    def has_default_domain(self) -> bool:
        return self.domain_min == (0.0, 0.0, 0.0) and self.domain_max == (1.0, 1.0, 1.0)

    def lattice(self) -> np.ndarray:
        """Table viewed as a (N, N, N, 3) array indexed [b, g, r]."""
        n = self.size
        return self.table.reshape(n, n, n, 3)

    def entry(self, r: int, g: int, b: int) -> RGB:
        n = self.size
        out = self.table[r + n * g + n * n * b]
        return float(out[0]), float(out[1]), float(out[2])

    def __str__(self) -> str:
        label = f", title={self.title!r}" if self.title else ""
        return f"Lut3d(size={self.size}{label})"
