"""Experiment settings: augmentation, training, loss weights and benchmark options."""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from lut_harmony.config import config
from lut_harmony.exceptions import ConfigError
from lut_harmony.models.enums import AppearanceMode, CropMode, MaskStyle

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


class AugmentConfig(BaseModel):
    """Content and appearance augmentation settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    jitter_min: int = Field(default=256, ge=1)
    jitter_max: int = Field(default=320, ge=1)
    crop_size: int = Field(default=224, ge=1)
    overlap_min: float = Field(default=0.2, ge=0.0, le=1.0)
    overlap_max: float = Field(default=0.9, ge=0.0, le=1.0)
    min_offset: int = Field(default=8, ge=0)
    mode: CropMode = CropMode.MULTI_CROP
    appearance: AppearanceMode = AppearanceMode.LUT

    @model_validator(mode="after")
    def validate_geometry(self) -> "AugmentConfig":
        if self.jitter_min > self.jitter_max:
            raise ValueError(
                f"jitter_min ({self.jitter_min}) must not exceed jitter_max ({self.jitter_max})"
            )
        if self.crop_size > self.jitter_min:
            raise ValueError(
                f"crop_size ({self.crop_size}) must not exceed jitter_min ({self.jitter_min})"
            )
        if self.overlap_min > self.overlap_max:
            raise ValueError(
                f"overlap_min ({self.overlap_min}) must not exceed overlap_max "
                f"({self.overlap_max})"
            )
        return self

    @classmethod
    def desk(cls, **kwargs) -> "AugmentConfig":
        """Small crops for training runs that finish in minutes."""
        values: Dict[str, Any] = {"jitter_min": 72, "jitter_max": 96, "crop_size": 64,
                                  "min_offset": 4}
        values.update(kwargs)
        return cls(**values)


class TrainConfig(BaseModel):
    """Optimizer and schedule settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = Field(default=2e-4, gt=0.0)
    epochs_const: int = Field(default=70, ge=0)
    epochs_decay: int = Field(default=30, ge=0)
    batch_size: int = Field(default=64, ge=1)
    steps_per_epoch: Optional[int] = Field(default=None, ge=1)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=0, ge=0)

    @property
    def total_epochs(self) -> int:
        return self.epochs_const + self.epochs_decay

    def learning_rate_at(self, epoch: int) -> float:
        """Constant for epochs_const epochs, then linear decay to 0 over epochs_decay."""
        if epoch < self.epochs_const:
            return self.learning_rate
        k = epoch - self.epochs_const
        if self.epochs_decay == 0 or k >= self.epochs_decay:
            return 0.0
        return self.learning_rate * (1.0 - k / self.epochs_decay)

    def resolve_steps_per_epoch(self, corpus_size: int) -> int:
        if self.steps_per_epoch is not None:
            return self.steps_per_epoch
        return max(1, -(-corpus_size // self.batch_size))

    @classmethod
    def desk(cls, **kwargs) -> "TrainConfig":
        """200 steps of batch 8: 6 constant + 2 decaying epochs of 25 steps."""
        values: Dict[str, Any] = {"learning_rate": 5e-3, "epochs_const": 6, "epochs_decay": 2,
                                  "batch_size": 8, "steps_per_epoch": 25}
        values.update(kwargs)
        return cls(**values)


class LossWeights(BaseModel):
    """Weights of the reconstruction (w1) and disentanglement (w2) terms."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    w1: float = Field(default=0.4, ge=0.0)
    w2: float = Field(default=0.05, ge=0.0)

    def without_recon(self) -> "LossWeights":
        return self.model_copy(update={"w1": 0.0})

    def without_dis(self) -> "LossWeights":
        return self.model_copy(update={"w2": 0.0})


class BenchmarkOptions(BaseModel):
    """Synthetic held-out benchmark and inference options."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    count: int = Field(default=50, ge=0)
    seed: int = Field(default=0, ge=0)
    mask_style: MaskStyle = MaskStyle.RECT
    locality: bool = True
    expand: float = Field(default=2.0, ge=1.0)
    evaluation_size: int = Field(default_factory=lambda: config.evaluation_size, ge=11)


class RunConfig(BaseModel):
    """
    Resolved configuration of one CLI run.

    Loaded from TOML, overridden by flags, and echoed next to every output so that
    (inputs, resolved config) fully determine a run.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=0, ge=0)
    workers: int = Field(default_factory=lambda: config.workers, ge=1)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    loss: LossWeights = Field(default_factory=LossWeights)
    benchmark: BenchmarkOptions = Field(default_factory=BenchmarkOptions)

    @classmethod
    def preset(cls, name: str) -> "RunConfig":
        if name == "full":
            return cls()
        if name == "desk":
            return cls(augment=AugmentConfig.desk(), train=TrainConfig.desk())
        raise ConfigError(f"Unknown preset: {name!r}. Expected 'full' or 'desk'")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], base: Optional["RunConfig"] = None) -> "RunConfig":
        """Merge a nested mapping over `base` (defaults when omitted)."""
        merged = (base or cls()).model_dump(mode="json")
        for key, value in data.items():
            if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
                merged[key].update(value)
            else:
                merged[key] = value
        try:
            return cls.model_validate(merged)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

    @classmethod
    def from_toml(cls, path: Union[str, Path], base: Optional["RunConfig"] = None) -> "RunConfig":
        try:
            data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        logger.info("Loaded run configuration from %s", path)
        return cls.from_mapping(data, base=base)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Apply dotted-key overrides such as {"train.learning_rate": 1e-3}. Flags win."""
        data = self.model_dump(mode="json")
        for dotted, value in overrides.items():
            if value is None:
                continue
            node = data
            *parents, leaf = dotted.split(".")
            for part in parents:
                if not isinstance(node.get(part), dict):
                    raise ConfigError(f"Unknown config section in override {dotted!r}")
                node = node[part]
            if leaf not in node and not self._is_optional_leaf(parents, leaf):
                raise ConfigError(f"Unknown config key in override {dotted!r}")
            node[leaf] = value
            logger.debug("Override %s=%s", dotted, value)
        try:
            return type(self).model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"Invalid override: {e}") from e

    def _is_optional_leaf(self, parents: list, leaf: str) -> bool:
        model: Any = self
        for part in parents:
            model = getattr(model, part)
        return leaf in type(model).model_fields

    def to_toml(self) -> str:
        return tomli_w.dumps(self.model_dump(mode="json", exclude_none=True))

    def write_echo(self, directory: Union[str, Path], name: str = "resolved_config.toml") -> Path:
        target = Path(directory) / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.to_toml(), encoding="utf-8")
        logger.info("Wrote resolved configuration to %s", target)
        return target
