"""
Harmonizer networks.

C' = F(G_c(C), G_r(R)) with an identity content encoder G_c, a statistics MLP for the
reference encoder G_r, and a fusion MLP F that predicts a global polynomial color
transform. All parameters live in one flat float64 vector, laid out layer by layer in
row-major order; named views address the individual layers.
"""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from lut_harmony.exceptions import NumericError
from lut_harmony.harmonizer.features import FEATURE_DIM, AppearanceFeatures, extract_features
from lut_harmony.models.image import ImageF32

logger = logging.getLogger(__name__)

HIDDEN_DIM = 32
CODE_DIM = 16
TRANSFORM_DIM = 15
FUSION_INPUT_DIM = CODE_DIM + FEATURE_DIM

LAYERS: List[Tuple[str, Tuple[int, ...]]] = [
    ("ref.w1", (HIDDEN_DIM, FEATURE_DIM)),
    ("ref.b1", (HIDDEN_DIM,)),
    ("ref.w2", (CODE_DIM, HIDDEN_DIM)),
    ("ref.b2", (CODE_DIM,)),
    ("fuse.w1", (HIDDEN_DIM, FUSION_INPUT_DIM)),
    ("fuse.b1", (HIDDEN_DIM,)),
    ("fuse.w2", (TRANSFORM_DIM, HIDDEN_DIM)),
    ("fuse.b2", (TRANSFORM_DIM,)),
]


def _build_offsets() -> Dict[str, Tuple[int, int, Tuple[int, ...]]]:
    offsets = {}
    start = 0
    for name, shape in LAYERS:
        stop = start + int(np.prod(shape))
        offsets[name] = (start, stop, shape)
        start = stop
    return offsets


OFFSETS = _build_offsets()
PARAM_COUNT = max(stop for _, stop, _ in OFFSETS.values())
REF_PARAM_COUNT = OFFSETS["ref.b2"][1]
FUSION_PARAM_COUNT = PARAM_COUNT - REF_PARAM_COUNT


def layer_view(flat: np.ndarray, name: str) -> np.ndarray:
    """View of one layer inside a flat parameter (or gradient) vector."""
    start, stop, shape = OFFSETS[name]
    return flat[start:stop].reshape(shape)


class HarmonizerModel(BaseModel):
    """Learnable parameters of the reference encoder and the fusion network."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: np.ndarray

    @field_validator("params", mode="before")
    @classmethod
    def validate_params(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.shape != (PARAM_COUNT,):
            raise ValueError(f"expected {PARAM_COUNT} parameters, got shape {arr.shape}")
        arr.setflags(write=False)
        return arr

    def layer(self, name: str) -> np.ndarray:
        return layer_view(self.params, name)

    @classmethod
    def zeros(cls) -> "HarmonizerModel":
        return cls(params=np.zeros(PARAM_COUNT))

    @classmethod
    def initialize(cls, seed: int) -> "HarmonizerModel":
        """
        Glorot-uniform weights, zero biases, and a zero final fusion layer so the
        predicted transform, and therefore the model, starts as the identity.
        """
        rng = np.random.default_rng(seed)
        params = np.zeros(PARAM_COUNT)
        for name in ("ref.w1", "ref.w2", "fuse.w1"):
            fan_out, fan_in = OFFSETS[name][2]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            layer_view(params, name)[...] = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        return cls(params=params)

    def with_params(self, params: np.ndarray) -> "HarmonizerModel":
        return HarmonizerModel(params=params)

    def __str__(self) -> str:
        return f"HarmonizerModel({PARAM_COUNT} params)"


class ColorTransform(BaseModel):
    """out_c = sum_j M[c, j] * in_j + b_c + g_c * in_c^2, per pixel."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    bias: np.ndarray
    quad: np.ndarray

    @classmethod
    def identity(cls) -> "ColorTransform":
        return cls(matrix=np.eye(3), bias=np.zeros(3), quad=np.zeros(3))

    @classmethod
    def from_raw(cls, theta: np.ndarray) -> "ColorTransform":
        """Coefficients = identity offset + raw 15-vector (M row-major, b, g)."""
        return cls(
            matrix=np.eye(3) + theta[0:9].reshape(3, 3),
            bias=np.array(theta[9:12]),
            quad=np.array(theta[12:15]),
        )

    def apply_pixels(self, pixels: np.ndarray) -> np.ndarray:
        return pixels @ self.matrix.T + self.bias + self.quad * pixels * pixels

    def apply(self, image: ImageF32, clamp: bool = True) -> ImageF32:
        out = self.apply_pixels(image.pixels())
        if clamp:
            out = np.clip(out, 0.0, 1.0)
        return ImageF32(data=out.reshape(image.data.shape))


def _check_finite(name: str, value: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise NumericError(name)
    return value


def ref_forward(params: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Reference encoder: z = W2 tanh(W1 x + b1) + b2. Returns (z, hidden)."""
    hidden = np.tanh(layer_view(params, "ref.w1") @ x + layer_view(params, "ref.b1"))
    z = layer_view(params, "ref.w2") @ hidden + layer_view(params, "ref.b2")
    return z, hidden


def fuse_forward(
        params: np.ndarray,
        code: np.ndarray,
        content_features: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fusion: raw transform = V2 tanh(V1 [z; phi(C)] + c1) + c2. Returns (raw, hidden, input)."""
    u = np.concatenate([code, content_features])
    hidden = np.tanh(layer_view(params, "fuse.w1") @ u + layer_view(params, "fuse.b1"))
    raw = layer_view(params, "fuse.w2") @ hidden + layer_view(params, "fuse.b2")
    return raw, hidden, u


def ref_encode(model: HarmonizerModel, features: AppearanceFeatures) -> np.ndarray:
    """Appearance code (16-vector) of a feature vector."""
    _check_finite("ref_encoder parameters", model.params[:REF_PARAM_COUNT])
    code, _ = ref_forward(model.params, features.vector)
    return _check_finite("appearance code", code)


def predict_transform(
        model: HarmonizerModel,
        content_features: AppearanceFeatures,
        reference_features: AppearanceFeatures
) -> ColorTransform:
    _check_finite("fusion parameters", model.params[REF_PARAM_COUNT:])
    code = ref_encode(model, reference_features)
    raw, _, _ = fuse_forward(model.params, code, content_features.vector)
    return ColorTransform.from_raw(_check_finite("color transform", raw))


def harmonize(
        model: HarmonizerModel,
        content: ImageF32,
        reference: ImageF32,
        clamp: bool = True
) -> ImageF32:
    """C' = F(G_c(C), G_r(R)). R only feeds its statistics, so sizes may differ."""
    transform = predict_transform(model, extract_features(content), extract_features(reference))
    return transform.apply(content, clamp=clamp)
