"""On-disk layout of triplet datasets, benchmarks, corpora and LUT banks."""

import json
import logging
import threading
from pathlib import Path
from typing import Dict, List, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from lut_harmony.exceptions import DatasetError
from lut_harmony.imagecore import decode_image, decode_mask, encode_image, encode_mask, read_image
from lut_harmony.lut import lut_id, read_cube, save_cube
from lut_harmony.models.enums import MaskStyle
from lut_harmony.models.image import Rect
from lut_harmony.models.lut import Lut3d
from lut_harmony.models.records import BenchmarkCase, CorpusItem
from lut_harmony.models.settings import AugmentConfig
from lut_harmony.utils import sha256_hex, write_bytes

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
IMAGE_SUFFIXES = (".png", ".ppm")


class SampleRecord(BaseModel):
    """Manifest entry of one triplet sample."""

    model_config = ConfigDict(frozen=True)

    index: int
    image_id: str
    seed: int
    jitter_size: int
    lut_a: str
    lut_b: str
    rects: Dict[str, Rect]
    files: Dict[str, str]
    sha256: Dict[str, str]


class DatasetManifest(BaseModel):
    """Triplet dataset manifest. Its bytes are a pure function of the generation inputs."""

    model_config = ConfigDict(frozen=True)

    version: int = MANIFEST_VERSION
    master_seed: int
    cfg: AugmentConfig
    corpus: List[str]
    bank: List[str]
    samples: List[SampleRecord] = Field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return sha256_hex(self.to_json().encode("utf-8"))


class CaseRecord(BaseModel):
    """Manifest entry of one benchmark case."""

    model_config = ConfigDict(frozen=True)

    case_id: str
    heldout_lut_id: str
    placement: Rect
    files: Dict[str, str]
    sha256: Dict[str, str]


class BenchmarkManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: int = MANIFEST_VERSION
    seed: int
    mask_style: MaskStyle
    cases: List[CaseRecord] = Field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        return sha256_hex(self.to_json().encode("utf-8"))


class DatasetWriter:
    """
    Context manager for writing a dataset directory.

    Tracks every file it writes; if the block raises, the partial output is removed
    so no half-written dataset is left behind. The manifest is written once, last.
    """

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.written: List[Path] = []
        self._lock = threading.Lock()
        logger.debug("DatasetWriter initialized for %s", self.root)

    def __enter__(self) -> "DatasetWriter":
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DatasetError(f"Cannot create output directory {self.root}: {e}") from e
        return self

    def write_files(self, files: Dict[str, bytes]) -> Dict[str, str]:
        """Write name -> bytes under root; returns name -> SHA-256 of the bytes."""
        digests = {}
        for name, data in files.items():
            path = self.root / name
            write_bytes(path, data)
            with self._lock:
                self.written.append(path)
            digests[name] = sha256_hex(data)
        return digests

    def write_manifest(self, manifest: Union[DatasetManifest, BenchmarkManifest]) -> str:
        text = manifest.to_json()
        path = self.root / MANIFEST_NAME
        write_bytes(path, text.encode("utf-8"))
        with self._lock:
            self.written.append(path)
        digest = sha256_hex(text.encode("utf-8"))
        logger.info("Wrote manifest %s (sha256 %s)", path, digest[:12])
        return digest

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Remove partial output when the block failed."""
        if exc_type is None:
            return False

        logger.warning(
            "Exiting with exception %s; removing %d partial files",
            exc_type.__name__, len(self.written)
        )
        cleanup_errors = []
        for path in self.written:
            try:
                path.unlink(missing_ok=True)
            except OSError as e:
                cleanup_errors.append(f"{path}: {e}")
        self.written.clear()
        if cleanup_errors:
            logger.warning(
                "Cleanup completed with %d errors:\n%s",
                len(cleanup_errors),
                "\n".join(f"  - {err}" for err in cleanup_errors)
            )
        return False


def read_manifest(root: Union[str, Path]) -> DatasetManifest:
    path = Path(root) / MANIFEST_NAME
    try:
        return DatasetManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise DatasetError(f"Cannot read manifest {path}: {e}") from e


def load_corpus(directory: Union[str, Path]) -> List[CorpusItem]:
    """Load every .png/.ppm in directory, sorted by name; ids are file stems."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"Corpus directory not found: {directory}")
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    corpus = [CorpusItem(image_id=p.stem, image=read_image(p)) for p in paths]
    logger.info("Loaded %d corpus images from %s", len(corpus), directory)
    return corpus


def load_bank(directory: Union[str, Path]) -> List[Lut3d]:
    """Load every .cube in directory, sorted by name; untitled LUTs take the file stem."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"LUT bank directory not found: {directory}")
    bank = []
    for path in sorted(directory.glob("*.cube")):
        lut = read_cube(path)
        if not lut.title:
            lut = lut.model_copy(update={"title": path.stem})
        bank.append(lut)
    logger.info("Loaded %d LUTs from %s", len(bank), directory)
    return bank


def save_bank(directory: Union[str, Path], bank: List[Lut3d]) -> List[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for lut in bank:
        path = directory / f"{lut_id(lut)}.cube"
        save_cube(path, lut)
        paths.append(path)
    return paths


def save_benchmark(
        root: Union[str, Path],
        cases: List[BenchmarkCase],
        seed: int,
        mask_style: MaskStyle
) -> str:
    """Write per-case bg/fg/mask/gt PNGs and the manifest; returns the manifest digest."""
    records = []
    with DatasetWriter(root) as writer:
        for index, case in enumerate(cases):
            files = {
                f"{index:06d}_bg.png": encode_image(case.background),
                f"{index:06d}_fg.png": encode_image(case.foreground),
                f"{index:06d}_mask.png": encode_mask(case.mask),
                f"{index:06d}_gt.png": encode_image(case.ground_truth),
            }
            digests = writer.write_files(files)
            records.append(CaseRecord(
                case_id=case.case_id,
                heldout_lut_id=case.heldout_lut_id,
                placement=case.placement,
                files={name.split("_", 1)[1][:-4]: name for name in files},
                sha256={name.split("_", 1)[1][:-4]: digests[name] for name in files},
            ))
        manifest = BenchmarkManifest(seed=seed, mask_style=mask_style, cases=records)
        return writer.write_manifest(manifest)


def load_benchmark(root: Union[str, Path]) -> List[BenchmarkCase]:
    root = Path(root)
    path = root / MANIFEST_NAME
    try:
        manifest = BenchmarkManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise DatasetError(f"Cannot read benchmark manifest {path}: {e}") from e

    def read(name: str) -> bytes:
        return (root / name).read_bytes()

    cases = []
    for record in manifest.cases:
        cases.append(BenchmarkCase(
            case_id=record.case_id,
            background=decode_image(read(record.files["bg"])),
            foreground=decode_image(read(record.files["fg"])),
            mask=decode_mask(read(record.files["mask"])),
            placement=record.placement,
            ground_truth=decode_image(read(record.files["gt"])),
            heldout_lut_id=record.heldout_lut_id,
        ))
    logger.info("Loaded %d benchmark cases from %s", len(cases), root)
    return cases
