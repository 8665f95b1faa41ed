"""
Ablation harness: train arms that differ in one switch from one configuration.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Sequence, Tuple

from forecasters.motion_conformer import ModelConfig, build_model
from motion_data.sequence import ForecastWindow
from training.config import TrainConfig
from training.trainer import Trainer, horizon_index, stack_windows
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)

# an arm converges when its final validation loss drops below this share of the initial one
CONVERGENCE_RATIO = 0.5

Arm = Tuple[str, ModelConfig, TrainConfig]


def _spec_aug_arms(model_cfg: ModelConfig, train_cfg: TrainConfig) -> List[Arm]:
    return [
        ("spec_aug", model_cfg, train_cfg.replace(spec_aug=replace(train_cfg.spec_aug, enabled=True))),
        ("no_spec_aug", model_cfg, train_cfg.replace(spec_aug=replace(train_cfg.spec_aug, enabled=False))),
    ]


def _reduction_arms(model_cfg: ModelConfig, train_cfg: TrainConfig) -> List[Arm]:
    return [
        ("reduction_end", replace(model_cfg, reduction_position="end"), train_cfg),
        ("reduction_start", replace(model_cfg, reduction_position="start"), train_cfg),
    ]


def _geo_aug_arms(model_cfg: ModelConfig, train_cfg: TrainConfig) -> List[Arm]:
    return [
        ("geo_aug", model_cfg, train_cfg.replace(geo_aug=replace(train_cfg.geo_aug, enabled=True))),
        ("no_geo_aug", model_cfg, train_cfg.replace(geo_aug=replace(train_cfg.geo_aug, enabled=False))),
    ]


SWITCHES: Dict[str, Callable[[ModelConfig, TrainConfig], List[Arm]]] = {
    "spec_aug": _spec_aug_arms,
    "reduction_position": _reduction_arms,
    "geo_aug": _geo_aug_arms,
}


@dataclass
class ArmResult:
    name: str
    param_count: int
    initial_val_loss: float
    final_val_loss: float
    final_val_mpjpe_1000: float
    history: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.final_val_loss < CONVERGENCE_RATIO * self.initial_val_loss


@dataclass
class AblationResult:
    switch: str
    arms: List[ArmResult]

    @property
    def delta_mpjpe_1000(self) -> float:
        """Second arm minus first arm (ablated minus reference)."""
        return self.arms[1].final_val_mpjpe_1000 - self.arms[0].final_val_mpjpe_1000

    def to_dict(self) -> Dict[str, Any]:
        return {
            'switch': self.switch,
            'delta_mpjpe_1000': self.delta_mpjpe_1000,
            'arms': [dict(asdict(arm), converged=arm.converged) for arm in self.arms],
        }


def run_ablation(model_cfg: ModelConfig, train_cfg: TrainConfig, train_windows: Sequence[ForecastWindow],
                 val_windows: Sequence[ForecastWindow], switch: str = "spec_aug") -> AblationResult:
    """Train every arm of ``switch`` from the same seed and compare validation MPJPE@1000."""
    if switch not in SWITCHES:
        raise ConfigurationError(f"Unknown ablation switch '{switch}', expected one of {sorted(SWITCHES)}")

    val_x, val_y = stack_windows(val_windows)
    index = horizon_index(val_windows[0].fps, val_y.shape[1])

    results = []
    for name, arm_model_cfg, arm_train_cfg in SWITCHES[switch](model_cfg, train_cfg):
        logger.info(f"Ablation '{switch}': training arm {name}")
        model = build_model(arm_model_cfg, seed=arm_train_cfg.seed)
        trainer = Trainer(model, arm_train_cfg)
        initial_loss, initial_mpjpe = trainer.validate(val_x, val_y, index)
        result = trainer.fit(train_windows, val_windows)
        last = result.history.records[-1] if result.history.records else None
        results.append(ArmResult(
            name=name,
            param_count=result.forecaster.param_count,
            initial_val_loss=initial_loss,
            final_val_loss=last.val_loss if last else initial_loss,
            final_val_mpjpe_1000=last.val_mpjpe_1000 if last else initial_mpjpe,
            history=result.history.to_list(),
        ))

    ablation = AblationResult(switch, results)
    logger.info(f"Ablation '{switch}': delta MPJPE@1000 = {ablation.delta_mpjpe_1000:+.2f} mm")
    return ablation
