"""
Gradient training of MotionConformer forecasters.

The loss is the time-averaged per-joint Euclidean error. One Trainer owns the
model state for the duration of a run; batches are assembled in a seed-fixed
order on the calling thread.
"""

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from tqdm import tqdm

from forecasters.motion_conformer import ConformerForecaster, MotionConformer
from motion_data.sequence import ForecastWindow
from motion_data.windows import center_window
from noise_lab.corruption import gaussian_perturbation
from training.augmentation import augment_batch, spec_augment_mask
from training.config import TrainConfig
from utils.error_handler import DataError, TrainingDivergedError
from utils.logger import log_epoch

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "val_mpjpe_1000")
# keeps the gradient of sqrt finite at zero error
NORM_EPS = 1e-9


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_mpjpe_1000: float


@dataclass
class TrainingHistory:
    """Per-epoch losses; epochs continue across resumed runs."""

    records: List[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord):
        self.records.append(record)

    @property
    def last_epoch(self) -> int:
        return self.records[-1].epoch if self.records else 0

    def column(self, name: str) -> List[float]:
        return [getattr(r, name) for r in self.records]

    def to_list(self) -> List[Dict[str, Any]]:
        return [asdict(r) for r in self.records]

    @classmethod
    def from_list(cls, rows: Sequence[Dict[str, Any]]) -> "TrainingHistory":
        return cls([EpochRecord(**row) for row in rows])

    def to_csv(self, path: str):
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(HISTORY_COLUMNS)
            for r in self.records:
                writer.writerow([r.epoch, f"{r.train_loss:.6f}", f"{r.val_loss:.6f}", f"{r.val_mpjpe_1000:.6f}"])


@dataclass
class TrainResult:
    forecaster: ConformerForecaster
    history: TrainingHistory
    steps: int


def euclidean_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean over samples, frames and joints of the joint distance; (B, T, J*3) tensors."""
    diff = (pred - target).reshape(pred.shape[0], pred.shape[1], -1, 3)
    return torch.sqrt((diff ** 2).sum(dim=-1) + NORM_EPS).mean()


def stack_windows(windows: Sequence[ForecastWindow]) -> Tuple[np.ndarray, np.ndarray]:
    """Centered [N][t_in][J][3] inputs and [N][t_out][J][3] targets."""
    if not windows:
        raise DataError("No windows to train on")
    centered = [w if w.centered else center_window(w) for w in windows]
    return (np.stack([w.input for w in centered]).astype(np.float32),
            np.stack([w.target for w in centered]).astype(np.float32))


def horizon_index(fps: float, t_out: int, horizon_ms: float = 1000.0) -> int:
    """Output frame of the validation horizon, clamped to the forecast length."""
    index = int(math.floor(horizon_ms * fps / 1000.0 + 0.5)) - 1
    clamped = min(max(index, 0), t_out - 1)
    if clamped != index:
        logger.warning(f"Validation horizon {horizon_ms:g} ms is frame {index + 1} at {fps:g} Hz but only "
                       f"{t_out} frames are forecast; validating at {1000.0 * (clamped + 1) / fps:g} ms")
    return clamped


class Trainer:
    def __init__(self, model: MotionConformer, cfg: TrainConfig, start_epoch: int = 0,
                 history: Optional[TrainingHistory] = None):
        self.model = model
        self.cfg = cfg
        self.start_epoch = start_epoch
        self.history = history if history is not None else TrainingHistory()
        self.rng = np.random.default_rng(cfg.seed)
        self.steps = 0

        self.optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate,
                                           weight_decay=cfg.weight_decay)
        self.total_steps = 0
        self.scheduler = None

    def _lr_factor(self, step: int) -> float:
        """Linear warmup, then cosine decay to zero at the last step."""
        warmup = self.cfg.warmup_steps
        if warmup and step < warmup:
            return (step + 1) / warmup
        span = max(1, self.total_steps - warmup)
        progress = min(1.0, (step - warmup) / span)
        return 0.5 * (1.0 + math.cos(math.pi * progress))

    def _configure_determinism(self):
        torch.manual_seed(self.cfg.seed)
        if self.cfg.deterministic:
            torch.set_num_threads(1)
            torch.use_deterministic_algorithms(True, warn_only=True)

    def _batch(self, inputs: np.ndarray, targets: np.ndarray) -> Tuple[torch.Tensor, torch.Tensor]:
        cfg = self.cfg
        inputs, targets = augment_batch(inputs, targets, cfg.geo_aug, self.rng)
        inputs = np.array(inputs)
        targets = np.array(targets)

        if cfg.input_noise.enabled:
            noise = cfg.input_noise
            inputs += gaussian_perturbation(self.rng, inputs.shape, noise.std, noise.clip).astype(inputs.dtype)
            if noise.noise_targets:
                targets += gaussian_perturbation(self.rng, targets.shape, noise.std, noise.clip).astype(targets.dtype)

        batch, t_in = inputs.shape[:2]
        flat = inputs.reshape(batch, t_in, -1)
        if cfg.spec_aug.enabled:
            for b in range(batch):
                flat[b][spec_augment_mask(flat[b].shape, cfg.spec_aug, self.rng)] = 0
        dtype = next(self.model.parameters()).dtype
        return (torch.as_tensor(flat, dtype=dtype),
                torch.as_tensor(targets.reshape(batch, targets.shape[1], -1), dtype=dtype))

    def validate(self, inputs: np.ndarray, targets: np.ndarray, index: int) -> Tuple[float, float]:
        """Loss and MPJPE at output frame ``index`` on un-augmented windows."""
        self.model.eval()
        dtype = next(self.model.parameters()).dtype
        losses, errors = [], []
        with torch.no_grad():
            for begin in range(0, inputs.shape[0], 256):
                x = torch.as_tensor(inputs[begin:begin + 256].reshape(-1, inputs.shape[1], inputs.shape[2] * 3),
                                    dtype=dtype)
                y = torch.as_tensor(targets[begin:begin + 256].reshape(-1, targets.shape[1], targets.shape[2] * 3),
                                    dtype=dtype)
                pred = self.model(x)
                losses.append(float(euclidean_loss(pred, y)) * x.shape[0])
                diff = (pred - y).reshape(x.shape[0], y.shape[1], -1, 3)[:, index]
                errors.append(float(diff.norm(dim=-1).mean()) * x.shape[0])
        n = inputs.shape[0]
        return sum(losses) / n, sum(errors) / n

    def _snapshot(self) -> Dict[str, torch.Tensor]:
        return {k: v.detach().clone() for k, v in self.model.state_dict().items()}

    def fit(self, train_windows: Sequence[ForecastWindow], val_windows: Sequence[ForecastWindow]) -> TrainResult:
        cfg = self.cfg
        if not train_windows or not val_windows:
            raise DataError("Training needs non-empty train and validation splits")
        self._configure_determinism()

        train_x, train_y = stack_windows(train_windows)
        val_x, val_y = stack_windows(val_windows)
        index = horizon_index(train_windows[0].fps, train_y.shape[1])

        batches_per_epoch = math.ceil(train_x.shape[0] / cfg.batch_size)
        self.total_steps = cfg.epochs * batches_per_epoch
        if cfg.max_steps is not None:
            self.total_steps = min(self.total_steps, cfg.max_steps)
        self.scheduler = torch.optim.lr_scheduler.LambdaLR(self.optimizer, self._lr_factor)

        logger.info(f"Training on {train_x.shape[0]} windows ({batches_per_epoch} batches/epoch, "
                    f"{self.total_steps} steps), validating on {val_x.shape[0]}")
        last_good = self._snapshot()
        last_good_epoch = self.start_epoch

        epoch = self.start_epoch
        while self.steps < self.total_steps:
            epoch += 1
            self.model.train()
            order = self.rng.permutation(train_x.shape[0])
            running, seen = 0.0, 0

            bar = tqdm(total=batches_per_epoch, desc=f"epoch {epoch}", leave=False,
                       disable=not cfg.show_progress)
            for begin in range(0, len(order), cfg.batch_size):
                if self.steps >= self.total_steps:
                    break
                idx = order[begin:begin + cfg.batch_size]
                x, y = self._batch(train_x[idx], train_y[idx])
                loss = euclidean_loss(self.model(x), y)
                if not torch.isfinite(loss):
                    bar.close()
                    self.model.load_state_dict(last_good)
                    logger.error(f"Non-finite loss at epoch {epoch}, step {self.steps}; "
                                 f"restored state of epoch {last_good_epoch}")
                    raise TrainingDivergedError(f"Training diverged at epoch {epoch}", last_good_epoch)

                self.optimizer.zero_grad()
                loss.backward()
                torch.nn.utils.clip_grad_norm_(self.model.parameters(), cfg.grad_clip_norm)
                self.optimizer.step()
                self.scheduler.step()
                self.steps += 1

                running += float(loss) * len(idx)
                seen += len(idx)
                bar.set_postfix(loss=f"{float(loss):.1f}")
                bar.update(1)
            bar.close()

            val_loss, val_mpjpe = self.validate(val_x, val_y, index)
            if not math.isfinite(val_loss):
                self.model.load_state_dict(last_good)
                raise TrainingDivergedError(f"Validation loss diverged at epoch {epoch}", last_good_epoch)
            record = EpochRecord(epoch, running / max(seen, 1), val_loss, val_mpjpe)
            self.history.append(record)
            log_epoch(epoch, record.train_loss, val_loss, val_mpjpe)
            last_good = self._snapshot()
            last_good_epoch = epoch

        self.model.eval()
        return TrainResult(ConformerForecaster(self.model), self.history, self.steps)


def train(model: MotionConformer, train_windows: Sequence[ForecastWindow],
          val_windows: Sequence[ForecastWindow], cfg: TrainConfig, start_epoch: int = 0,
          history: Optional[TrainingHistory] = None) -> TrainResult:
    """Train ``model`` in place and return it wrapped as a forecaster with its history."""
    return Trainer(model, cfg, start_epoch, history).fit(train_windows, val_windows)
