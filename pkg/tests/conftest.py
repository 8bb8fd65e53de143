"""Shared synthetic fixtures for the LUT Harmony test suite."""

import os
import sys

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from lut_harmony.config import config
from lut_harmony.lut import generate_bank
from lut_harmony.models import AugmentConfig, CorpusItem, ImageF32


def gradient_image(width: int, height: int, seed: int, noise: float = 0.05) -> ImageF32:
    """Smooth seeded color gradients plus a little noise, inside [0, 1]."""
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width]
    u = xs / max(width - 1, 1)
    v = ys / max(height - 1, 1)
    channels = []
    for _ in range(3):
        a, b, c = rng.uniform(-0.4, 0.4, size=3)
        base = rng.uniform(0.3, 0.7)
        channels.append(base + a * u + b * v + c * u * v)
    data = np.stack(channels, axis=-1) + rng.normal(0.0, noise, size=(height, width, 3))
    return ImageF32(data=np.clip(data, 0.0, 1.0))


def random_image(width: int, height: int, seed: int) -> ImageF32:
    rng = np.random.default_rng(seed)
    return ImageF32(data=rng.uniform(0.0, 1.0, size=(height, width, 3)))


@pytest.fixture(autouse=True)
def restore_harmony_config():
    """Runtime knobs changed by a test are restored afterwards."""
    saved = dict(vars(config))
    yield
    vars(config).update(saved)


@pytest.fixture
def small_corpus():
    return [CorpusItem(image_id=f"img_{i:02d}", image=gradient_image(96, 80, seed=i)) for i in range(4)]


@pytest.fixture
def small_bank():
    return generate_bank(count=4, seed=3, strength=0.5, size=5)


@pytest.fixture
def tiny_augment():
    """Crops small enough for tests that train or generate many triplets."""
    return AugmentConfig(jitter_min=40, jitter_max=48, crop_size=32, min_offset=2)
