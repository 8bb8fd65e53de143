"""Desk-scale harmonizer: features, networks, objective and training."""

from lut_harmony.harmonizer.features import FEATURE_DIM, AppearanceFeatures, extract_features
from lut_harmony.harmonizer.network import (
    PARAM_COUNT,
    ColorTransform,
    HarmonizerModel,
    harmonize,
    predict_transform,
    ref_encode,
)
from lut_harmony.harmonizer.objective import (
    batch_loss_and_grad,
    grad,
    loss_total,
    mean_disentanglement,
)
from lut_harmony.harmonizer.training import (
    Adam,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history_csv,
)

__all__ = [
    "FEATURE_DIM",
    "PARAM_COUNT",
    "AppearanceFeatures",
    "extract_features",
    "ColorTransform",
    "HarmonizerModel",
    "harmonize",
    "predict_transform",
    "ref_encode",
    "loss_total",
    "grad",
    "batch_loss_and_grad",
    "mean_disentanglement",
    "Adam",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "write_history_csv",
]
