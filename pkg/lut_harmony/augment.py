"""
Dual data augmentation: overlapping multi-crops plus paired appearance perturbations.

Every sample draws its randomness from mix_seed(master_seed, index) alone, so datasets
and training batches are identical for any number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from lut_harmony.appearance import (
    ChannelStats,
    ColorTransferAppearance,
    LutAppearance,
    SaturationAppearance,
    color_transfer_meanstd,
    saturation_jitter,
)
from lut_harmony.dataset import DatasetManifest, DatasetWriter, SampleRecord
from lut_harmony.exceptions import GenerationError
from lut_harmony.imagecore import crop, encode_image, resize_short_side
from lut_harmony.lut import lut_id
from lut_harmony.models.base import BaseAppearance
from lut_harmony.models.enums import AppearanceMode, CropMode
from lut_harmony.models.image import ImageF32, Rect
from lut_harmony.models.lut import Lut3d
from lut_harmony.models.records import CorpusItem, Provenance, TripletSample
from lut_harmony.models.settings import AugmentConfig
from lut_harmony.utils import mix_seed, sample_until

logger = logging.getLogger(__name__)

MIN_SOURCE_SIDE = 64
TRIPLET_SUFFIXES = ("ca", "cb", "ra", "rb")

# Sub-stream tags under a sample seed.
_CROP_STREAM = 0
_APPEARANCE_STREAM = 1

__all__ = [
    "MIN_SOURCE_SIDE",
    "sample_crop_pair",
    "gen_triplet",
    "gen_triplet_with",
    "generate_sample",
    "generate_batch",
    "gen_dataset",
    "draw_lut_pair",
    "color_transfer_meanstd",
    "saturation_jitter",
    "ChannelStats",
]

AppearancePairFactory = Callable[[ImageF32], Tuple[BaseAppearance, BaseAppearance]]


def _overlap_ok(first: Rect, second: Rect, cfg: AugmentConfig) -> bool:
    ratio = first.intersection_area(second) / first.area
    if not cfg.overlap_min <= ratio <= cfg.overlap_max:
        return False
    return (
        abs(first.x - second.x) >= cfg.min_offset
        or abs(first.y - second.y) >= cfg.min_offset
    )


def sample_crop_pair(
        image: ImageF32,
        seed: int,
        cfg: AugmentConfig
) -> Tuple[Rect, Rect, ImageF32]:
    """
    Jitter the scale, then draw content and reference crop rects on the resized image.

    The short side is resized to s ~ U{jitter_min..jitter_max}. In multi_crop mode the
    pair is rejection-sampled until its overlap ratio lies in the configured window and
    the top-left corners differ by at least min_offset on some axis; single_crop mode
    returns the same rect twice.
    """
    if min(image.size) < MIN_SOURCE_SIDE:
        raise GenerationError(
            f"Source image {image.width}x{image.height} is too small; "
            f"the short side must be at least {MIN_SOURCE_SIDE}"
        )

    rng = np.random.default_rng(seed)
    short_side = int(rng.integers(cfg.jitter_min, cfg.jitter_max + 1))
    resized = resize_short_side(image, short_side)
    size = cfg.crop_size

    def draw_rect() -> Rect:
        x = int(rng.integers(0, resized.width - size + 1))
        y = int(rng.integers(0, resized.height - size + 1))
        return Rect(x=x, y=y, w=size, h=size)

    if cfg.mode == CropMode.SINGLE_CROP:
        rect = draw_rect()
        return rect, rect, resized

    first, second = sample_until(
        lambda: (draw_rect(), draw_rect()),
        lambda pair: _overlap_ok(pair[0], pair[1], cfg),
        what="an overlapping crop pair",
    )
    return first, second, resized


def gen_triplet_with(
        image: ImageF32,
        make_pair: AppearancePairFactory,
        seed: int,
        cfg: AugmentConfig,
        image_id: str = "image"
) -> TripletSample:
    """Crop first, then apply appearance alpha and beta to both crops."""
    content_rect, reference_rect, resized = sample_crop_pair(image, mix_seed(seed, _CROP_STREAM), cfg)
    alpha, beta = make_pair(resized)

    content = crop(resized, content_rect)
    reference = crop(resized, reference_rect)
    return TripletSample(
        content_a=alpha.apply(content),
        content_b=beta.apply(content),
        ref_a=alpha.apply(reference),
        ref_b=beta.apply(reference),
        provenance=Provenance(
            image_id=image_id,
            seed=seed,
            jitter_size=min(resized.size),
            content_rect=content_rect,
            reference_rect=reference_rect,
            lut_a=alpha.appearance_id,
            lut_b=beta.appearance_id,
        ),
    )


def gen_triplet(
        image: ImageF32,
        lut_a: Lut3d,
        lut_b: Lut3d,
        seed: int,
        cfg: AugmentConfig,
        image_id: str = "image",
        allow_same: bool = False
) -> TripletSample:
    """Build (C_a, C_b, R_a, R_b) from one image and two LUTs."""
    if not allow_same and lut_id(lut_a) == lut_id(lut_b):
        raise GenerationError(
            f"gen_triplet needs two different LUTs, got {lut_id(lut_a)!r} twice"
        )
    pair = (LutAppearance(lut=lut_a), LutAppearance(lut=lut_b))
    return gen_triplet_with(image, lambda _resized: pair, seed, cfg, image_id)


def draw_lut_pair(rng: np.random.Generator, bank_size: int) -> Tuple[int, int]:
    """Uniform ordered pair of distinct bank indices."""
    first = int(rng.integers(bank_size))
    second = int(rng.integers(bank_size - 1))
    if second >= first:
        second += 1
    return first, second


def _check_inputs(corpus: Sequence[CorpusItem], bank: Sequence[Lut3d], cfg: AugmentConfig) -> None:
    if not corpus:
        raise GenerationError("Corpus is empty")
    if cfg.appearance == AppearanceMode.LUT and len(bank) < 2:
        raise GenerationError(
            f"LUT bank needs at least 2 LUTs for ordered distinct pairs, got {len(bank)}"
        )


def generate_sample(
        corpus: Sequence[CorpusItem],
        bank: Sequence[Lut3d],
        index: int,
        master_seed: int,
        cfg: AugmentConfig
) -> TripletSample:
    """Sample `index` of the stream defined by master_seed: image, appearance pair, crops."""
    seed = mix_seed(master_seed, index)
    rng = np.random.default_rng(seed)
    item = corpus[int(rng.integers(len(corpus)))]
    appearance_rng = np.random.default_rng(mix_seed(seed, _APPEARANCE_STREAM))

    if cfg.appearance == AppearanceMode.LUT:
        a, b = draw_lut_pair(rng, len(bank))
        pair = (LutAppearance(lut=bank[a]), LutAppearance(lut=bank[b]))
        make_pair: AppearancePairFactory = lambda _resized: pair
    elif cfg.appearance == AppearanceMode.COLOR_TRANSFER:
        def make_pair(resized: ImageF32) -> Tuple[BaseAppearance, BaseAppearance]:
            return (
                ColorTransferAppearance.random(appearance_rng, resized),
                ColorTransferAppearance.random(appearance_rng, resized),
            )
    else:
        def make_pair(resized: ImageF32) -> Tuple[BaseAppearance, BaseAppearance]:
            return (
                SaturationAppearance.random(appearance_rng),
                SaturationAppearance.random(appearance_rng),
            )

    return gen_triplet_with(item.image, make_pair, seed, cfg, item.image_id)


def generate_batch(
        corpus: Sequence[CorpusItem],
        bank: Sequence[Lut3d],
        start: int,
        count: int,
        master_seed: int,
        cfg: AugmentConfig,
        workers: int = 1
) -> List[TripletSample]:
    """Samples start .. start+count-1, returned in index order."""
    _check_inputs(corpus, bank, cfg)
    indices = range(start, start + count)
    if workers <= 1:
        return [generate_sample(corpus, bank, i, master_seed, cfg) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(
            lambda i: generate_sample(corpus, bank, i, master_seed, cfg), indices
        ))


def _encode_triplet(triplet: TripletSample) -> List[bytes]:
    return [
        encode_image(img)
        for img in (triplet.content_a, triplet.content_b, triplet.ref_a, triplet.ref_b)
    ]


def gen_dataset(
        corpus: Sequence[Union[CorpusItem, ImageF32]],
        bank: Sequence[Lut3d],
        count: int,
        master_seed: int,
        cfg: AugmentConfig,
        root: Union[str, Path],
        workers: int = 1
) -> DatasetManifest:
    """
    Generate `count` triplets into root as NNNNNN_{ca,cb,ra,rb}.png plus manifest.json.

    Samples may be produced on any number of workers; the manifest is assembled in
    index order and written once at the end, so its bytes do not depend on workers.
    """
    items = [
        item if isinstance(item, CorpusItem) else CorpusItem(image_id=f"img_{i:04d}", image=item)
        for i, item in enumerate(corpus)
    ]
    _check_inputs(items, bank, cfg)

    def produce(index: int) -> SampleRecord:
        triplet = generate_sample(items, bank, index, master_seed, cfg)
        names = [f"{index:06d}_{suffix}.png" for suffix in TRIPLET_SUFFIXES]
        digests = writer.write_files(dict(zip(names, _encode_triplet(triplet))))
        prov = triplet.provenance
        assert prov is not None
        logger.debug("Sample %d from %s with %s -> %s", index, prov.image_id, prov.lut_a, prov.lut_b)
        return SampleRecord(
            index=index,
            image_id=prov.image_id,
            seed=prov.seed,
            jitter_size=prov.jitter_size,
            lut_a=prov.lut_a,
            lut_b=prov.lut_b,
            rects={"content": prov.content_rect, "reference": prov.reference_rect},
            files=dict(zip(TRIPLET_SUFFIXES, names)),
            sha256={suffix: digests[name] for suffix, name in zip(TRIPLET_SUFFIXES, names)},
        )

    with DatasetWriter(root) as writer:
        if workers <= 1:
            records = [produce(i) for i in range(count)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(produce, range(count)))

        manifest = DatasetManifest(
            master_seed=master_seed,
            cfg=cfg,
            corpus=[item.image_id for item in items],
            bank=[lut_id(lut) for lut in bank],
            samples=records,
        )
        writer.write_manifest(manifest)

    logger.info("Generated %d triplets into %s with %d workers", count, root, workers)
    return manifest
