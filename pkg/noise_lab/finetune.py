"""
Unsupervised finetuning on noisy estimator output.

Noisy sequences serve as both inputs and targets; the clean half of a paired
corpus is only read to produce the optional before/after reports.
"""

import copy
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from forecasters.motion_conformer import ConformerForecaster
from metrics.horizons import HorizonSet
from metrics.report import MetricReport
from motion_data.sequence import ForecastWindow, WindowSpec
from noise_lab.dual_eval import evaluate_dual
from noise_lab.paired_corpus import PairedCorpus, noisy_windows
from training.config import TrainConfig
from training.trainer import TrainingHistory, train
from utils.error_handler import ConfigurationError, DataError

logger = logging.getLogger(__name__)

DEFAULT_LR_FRACTION = 0.1


@dataclass
class FinetuneResult:
    forecaster: ConformerForecaster
    history: TrainingHistory
    before: Optional[Tuple[MetricReport, MetricReport]] = None
    after: Optional[Tuple[MetricReport, MetricReport]] = None


def finetune_config(cfg: TrainConfig, lr_fraction: float = DEFAULT_LR_FRACTION) -> TrainConfig:
    """Pretraining settings scaled for finetuning: reduced learning rate, no SpecAug."""
    if not 0 <= lr_fraction <= 1:
        raise ConfigurationError(f"lr_fraction must be in [0, 1], got {lr_fraction}")
    return cfg.replace(learning_rate=cfg.learning_rate * lr_fraction,
                       spec_aug=replace(cfg.spec_aug, enabled=False))


def split_windows(windows: Sequence[ForecastWindow], val_fraction: float,
                  seed: int) -> Tuple[List[ForecastWindow], List[ForecastWindow]]:
    """Seeded shuffle into train/val, with at least one window on each side."""
    if len(windows) < 2:
        raise DataError(f"Finetuning needs at least 2 windows, got {len(windows)}")
    if not 0 < val_fraction < 1:
        raise ConfigurationError(f"val_fraction must be in (0, 1), got {val_fraction}")
    order = np.random.default_rng(seed).permutation(len(windows))
    n_val = min(len(windows) - 1, max(1, int(round(val_fraction * len(windows)))))
    val = [windows[i] for i in sorted(order[:n_val])]
    train_part = [windows[i] for i in sorted(order[n_val:])]
    return train_part, val


def finetune_unsupervised(forecaster: ConformerForecaster, corpus: PairedCorpus, cfg: TrainConfig,
                          window_spec: WindowSpec, horizons: Optional[HorizonSet] = None,
                          val_fraction: float = 0.1, measure_speed: bool = False) -> FinetuneResult:
    """
    Continue training a copy of ``forecaster`` on noisy windows only.

    ``cfg`` is used as given (see finetune_config for the default schedule).
    When ``horizons`` is set, dual reports are computed before and after.
    Epoch numbering restarts at 1 for the finetuning run.
    """
    before = None
    if horizons is not None:
        before = evaluate_dual(forecaster, corpus, horizons, window_spec, measure_speed=measure_speed)

    windows = noisy_windows(corpus, window_spec)
    train_windows, val_windows = split_windows(windows, val_fraction, cfg.seed)
    logger.info(f"Finetuning on {len(train_windows)} noisy windows (val {len(val_windows)}), "
                f"lr {cfg.learning_rate:g}")

    model = copy.deepcopy(forecaster.model)
    result = train(model, train_windows, val_windows, cfg)

    after = None
    if horizons is not None:
        after = evaluate_dual(result.forecaster, corpus, horizons, window_spec, measure_speed=measure_speed)
    return FinetuneResult(result.forecaster, result.history, before, after)
