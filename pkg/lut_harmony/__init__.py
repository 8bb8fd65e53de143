"""
LUT Harmony: self-supervised image harmonization driven by 3D LUT augmentation.

Manufactures pseudo training triplets from unlabeled images with overlapping crops and
paired LUT appearances, trains a small harmonizer on them, and scores it on a
synthetic held-out benchmark.

Example:
    >>> from lut_harmony import AugmentConfig, generate_bank, gen_triplet
    >>> bank = generate_bank(count=2, seed=7, strength=0.5)
    >>> triplet = gen_triplet(image, bank[0], bank[1], seed=1, cfg=AugmentConfig.desk())
"""

from lut_harmony.augment import gen_dataset, gen_triplet, sample_crop_pair
from lut_harmony.config import HarmonyConfig, config
from lut_harmony.dataset import load_bank, load_benchmark, load_corpus, save_benchmark
from lut_harmony.exceptions import (
    BoundsError,
    ColorMapFitError,
    ConfigError,
    CubeParseError,
    DatasetError,
    DimensionMismatchError,
    GenerationError,
    HarmonyError,
    ImageDecodeError,
    LutValidationError,
    NumericError,
    UnsupportedFormatError,
)
from lut_harmony.harmonizer import (
    HarmonizerModel,
    extract_features,
    grad,
    harmonize,
    load_checkpoint,
    loss_total,
    save_checkpoint,
    train,
)
from lut_harmony.imagecore import composite, crop, decode_image, encode_image, resize_bilinear
from lut_harmony.lut import (
    apply_lut,
    apply_lut_image,
    generate_bank,
    identity_lut,
    lut_id,
    parse_cube,
    random_smooth_lut,
    write_cube,
)
from lut_harmony.metrics import evaluate_pair, mse, psnr, ssim
from lut_harmony.models import (
    AugmentConfig,
    BenchmarkCase,
    BenchmarkOptions,
    ImageF32,
    LossReport,
    LossWeights,
    Lut3d,
    Mask,
    MetricsReport,
    Rect,
    RunConfig,
    TrainConfig,
    TripletSample,
)
from lut_harmony.pipeline import (
    apply_color_map,
    fit_color_map,
    harmonize_composite,
    locality_crop,
    run_benchmark,
    synth_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    # Configuration
    "config",
    "HarmonyConfig",
    "AugmentConfig",
    "TrainConfig",
    "LossWeights",
    "BenchmarkOptions",
    "RunConfig",
    # Models
    "ImageF32",
    "Mask",
    "Rect",
    "Lut3d",
    "TripletSample",
    "LossReport",
    "MetricsReport",
    "BenchmarkCase",
    "HarmonizerModel",
    # Images and LUTs
    "decode_image",
    "encode_image",
    "crop",
    "resize_bilinear",
    "composite",
    "parse_cube",
    "write_cube",
    "identity_lut",
    "apply_lut",
    "apply_lut_image",
    "random_smooth_lut",
    "generate_bank",
    "lut_id",
    # Augmentation and data
    "sample_crop_pair",
    "gen_triplet",
    "gen_dataset",
    "load_corpus",
    "load_bank",
    "save_benchmark",
    "load_benchmark",
    # Harmonizer
    "extract_features",
    "harmonize",
    "loss_total",
    "grad",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    # Evaluation and inference
    "mse",
    "psnr",
    "ssim",
    "evaluate_pair",
    "locality_crop",
    "harmonize_composite",
    "fit_color_map",
    "apply_color_map",
    "synth_benchmark",
    "run_benchmark",
    # Exceptions
    "HarmonyError",
    "ImageDecodeError",
    "BoundsError",
    "DimensionMismatchError",
    "CubeParseError",
    "LutValidationError",
    "GenerationError",
    "NumericError",
    "UnsupportedFormatError",
    "ColorMapFitError",
    "ConfigError",
    "DatasetError",
]
