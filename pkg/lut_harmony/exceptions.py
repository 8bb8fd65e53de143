"""Custom exception hierarchy for LUT Harmony."""

from typing import Optional


class HarmonyError(Exception):
    """Base exception for all LUT Harmony errors."""
    pass


class ImageDecodeError(HarmonyError):
    """Raised when an image file is malformed, truncated or has an unsupported bit depth."""

    def __init__(self, message: str, offset: Optional[int] = None, field: Optional[str] = None):
        location = []
        if field is not None:
            location.append(f"field {field}")
        if offset is not None:
            location.append(f"offset {offset}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.offset = offset
        self.field = field


class BoundsError(HarmonyError):
    """Raised when a rectangle does not fit inside the image it addresses."""
    pass


class DimensionMismatchError(HarmonyError):
    """Raised when two rasters that must share a size do not."""
    pass


class CubeParseError(HarmonyError):
    """Raised when .cube text cannot be parsed. Messages start with the offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LutValidationError(HarmonyError):
    """Raised when LUT parameters fall outside their valid range."""
    pass


class GenerationError(HarmonyError):
    """Raised when training data or benchmark cases cannot be generated."""
    pass


class NumericError(HarmonyError):
    """Raised when a parameter or intermediate tensor becomes non-finite."""

    def __init__(self, tensor: str, message: str = "contains non-finite values"):
        super().__init__(f"{tensor} {message}")
        self.tensor = tensor


class ColorMapFitError(HarmonyError):
    """Raised when a polynomial color map cannot be fitted."""
    pass


class ConfigError(HarmonyError):
    """Raised when a run configuration is invalid or conflicting."""
    pass


class DatasetError(HarmonyError):
    """Raised when a dataset or benchmark directory cannot be written or read."""
    pass


class UnsupportedFormatError(HarmonyError):
    """Raised when a path's extension names no supported image codec."""
    pass
