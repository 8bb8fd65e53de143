"""Adam training loop over on-the-fly triplets, checkpoints and loss history."""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from lut_harmony.augment import generate_batch
from lut_harmony.exceptions import DatasetError, NumericError
from lut_harmony.harmonizer.network import LAYERS, PARAM_COUNT, HarmonizerModel
from lut_harmony.harmonizer.objective import batch_loss_and_grad
from lut_harmony.models.image import ImageF32
from lut_harmony.models.lut import Lut3d
from lut_harmony.models.records import CorpusItem, EpochRecord, LossReport, TrainingHistory
from lut_harmony.models.settings import AugmentConfig, LossWeights, TrainConfig
from lut_harmony.utils import mix_seed, write_bytes

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
HISTORY_COLUMNS = ("epoch", "l_harm", "l_recon", "l_dis", "l_dis_content", "total", "lr")

_INIT_STREAM = 0
_DATA_STREAM = 1


class Adam:
    """Adam with bias correction; the learning rate is passed per step."""

    def __init__(self, size: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    @classmethod
    def from_config(cls, cfg: TrainConfig) -> "Adam":
        return cls(PARAM_COUNT, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)

    def step(self, params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _as_corpus(corpus: Sequence[Union[CorpusItem, ImageF32]]) -> list:
    return [
        item if isinstance(item, CorpusItem) else CorpusItem(image_id=f"img_{i:04d}", image=item)
        for i, item in enumerate(corpus)
    ]


def train(
        corpus: Sequence[Union[CorpusItem, ImageF32]],
        bank: Sequence[Lut3d],
        cfg: TrainConfig,
        aug_cfg: AugmentConfig,
        weights: Optional[LossWeights] = None,
        workers: int = 1
) -> Tuple[HarmonizerModel, TrainingHistory]:
    """
    Train from scratch with triplets generated on the fly.

    Step s of the run uses samples s*batch .. (s+1)*batch-1 of the stream seeded by
    cfg.seed, so the run is reproducible for any worker count.
    """
    weights = weights or LossWeights()
    items = _as_corpus(corpus)
    model = HarmonizerModel.initialize(mix_seed(cfg.seed, _INIT_STREAM))
    history = TrainingHistory()
    if cfg.total_epochs == 0:
        logger.info("No epochs configured; returning the initialized model")
        return model, history

    data_seed = mix_seed(cfg.seed, _DATA_STREAM)
    steps = cfg.resolve_steps_per_epoch(len(items))
    optimizer = Adam.from_config(cfg)
    params = np.array(model.params)
    logger.info(
        "Training %d epochs x %d steps, batch %d, lr %g, weights w1=%g w2=%g",
        cfg.total_epochs, steps, cfg.batch_size, cfg.learning_rate, weights.w1, weights.w2
    )

    step = 0
    for epoch in range(cfg.total_epochs):
        lr = cfg.learning_rate_at(epoch)
        epoch_sum = LossReport.zero()
        for _ in range(steps):
            batch = generate_batch(
                items, bank, step * cfg.batch_size, cfg.batch_size, data_seed, aug_cfg, workers
            )
            report, grad = batch_loss_and_grad(model, batch, weights, workers)
            report = report.scaled(1.0 / cfg.batch_size)
            params = optimizer.step(params, grad / cfg.batch_size, lr)
            if not np.all(np.isfinite(params)):
                raise NumericError("parameters", f"became non-finite at step {step}")
            model = model.with_params(params)
            history.step_totals.append(report.total)
            epoch_sum = epoch_sum + report
            logger.debug("Step %d: total %.6f", step, report.total)
            step += 1

        record = EpochRecord(epoch=epoch, lr=lr, losses=epoch_sum.scaled(1.0 / steps))
        history.epochs.append(record)
        logger.info(
            "Epoch %d/%d lr=%.3g total=%.6f harm=%.6f recon=%.6f dis=%.6f",
            epoch + 1, cfg.total_epochs, lr, record.losses.total, record.losses.l_harm,
            record.losses.l_recon, record.losses.l_dis
        )

    return model, history


def save_checkpoint(
        path: Union[str, Path],
        model: HarmonizerModel,
        cfg: Optional[TrainConfig] = None
) -> Path:
    """Single JSON file: version, layer shapes, flat row-major parameters, TrainConfig echo."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "shapes": {name: list(shape) for name, shape in LAYERS},
        "params": [float(v) for v in model.params],
        "train_config": (cfg or TrainConfig()).model_dump(mode="json"),
    }
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    write_bytes(target, (json.dumps(payload, indent=1) + "\n").encode("utf-8"))
    logger.info("Saved checkpoint %s", target)
    return target


def load_checkpoint(path: Union[str, Path]) -> Tuple[HarmonizerModel, TrainConfig]:
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise DatasetError(f"Cannot read checkpoint {source}: {e}") from e

    if payload.get("version") != CHECKPOINT_VERSION:
        raise DatasetError(f"Unsupported checkpoint version {payload.get('version')!r} in {source}")
    expected = {name: list(shape) for name, shape in LAYERS}
    if payload.get("shapes") != expected:
        raise DatasetError(f"Checkpoint {source} has incompatible layer shapes")
    try:
        model = HarmonizerModel(params=payload["params"])
        cfg = TrainConfig.model_validate(payload.get("train_config", {}))
    except (KeyError, ValidationError) as e:
        raise DatasetError(f"Invalid checkpoint {source}: {e}") from e
    logger.info("Loaded checkpoint %s", source)
    return model, cfg


def history_csv(history: TrainingHistory) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HISTORY_COLUMNS)
    for record in history.epochs:
        losses = record.losses
        writer.writerow([
            record.epoch, repr(losses.l_harm), repr(losses.l_recon), repr(losses.l_dis),
            repr(losses.l_dis_content), repr(losses.total), repr(record.lr),
        ])
    return buffer.getvalue()


def write_history_csv(path: Union[str, Path], history: TrainingHistory) -> Path:
    target = Path(path)
    write_bytes(target, history_csv(history).encode("utf-8"))
    logger.info("Wrote training history (%d epochs) to %s", len(history.epochs), target)
    return target
