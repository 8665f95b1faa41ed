"""
Training and augmentation settings.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

from utils.error_handler import ConfigurationError


@dataclass(frozen=True)
class GeoAugSpec:
    """One random yaw (about the vertical y axis) and one uniform scale per window."""

    enabled: bool = True
    yaw_range: float = math.pi
    scale_range: Tuple[float, float] = (0.9, 1.1)

    def __post_init__(self):
        low, high = self.scale_range
        if not 0 < low <= high:
            raise ConfigurationError(f"scale_range must satisfy 0 < low <= high, got {self.scale_range}")
        if self.yaw_range < 0:
            raise ConfigurationError(f"yaw_range must be >= 0, got {self.yaw_range}")
        object.__setattr__(self, 'scale_range', (float(low), float(high)))


@dataclass(frozen=True)
class SpecAugSpec:
    """Contiguous zero masks over input frames and input channels."""

    enabled: bool = True
    time_masks: int = 2
    time_mask_max: int = 10
    channel_masks: int = 2
    channel_mask_max: int = 6

    def __post_init__(self):
        if min(self.time_masks, self.time_mask_max, self.channel_masks, self.channel_mask_max) < 0:
            raise ConfigurationError("SpecAug counts and widths must be >= 0")

    def check_axes(self, frames: int, channels: int):
        if self.time_mask_max > frames or self.channel_mask_max > channels:
            raise ConfigurationError(
                f"SpecAug mask widths ({self.time_mask_max} frames, {self.channel_mask_max} channels) "
                f"exceed the input ({frames} frames, {channels} channels)")


@dataclass(frozen=True)
class InputNoiseSpec:
    """Clipped Gaussian corruption of training inputs (and optionally targets)."""

    enabled: bool = False
    std: float = 25.0
    clip: float = 125.0
    noise_targets: bool = False

    def __post_init__(self):
        if self.enabled and not (self.std > 0 and self.clip >= self.std):
            raise ConfigurationError(f"Input noise needs std > 0 and clip >= std, got {self.std}/{self.clip}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    max_steps: Optional[int] = None
    warmup_steps: int = 100
    weight_decay: float = 1e-4
    grad_clip_norm: float = 1.0
    geo_aug: GeoAugSpec = field(default_factory=GeoAugSpec)
    spec_aug: SpecAugSpec = field(default_factory=SpecAugSpec)
    input_noise: InputNoiseSpec = field(default_factory=InputNoiseSpec)
    deterministic: bool = False
    show_progress: bool = True

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigurationError("batch_size must be >= 1 and epochs >= 0")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigurationError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.warmup_steps < 0 or self.weight_decay < 0 or not self.grad_clip_norm > 0:
            raise ConfigurationError("warmup_steps and weight_decay must be >= 0, grad_clip_norm > 0")

    def replace(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], seed: int = 0, deterministic: bool = False,
                  show_progress: bool = True) -> "TrainConfig":
        """Build from the ``train`` section of a run configuration."""
        data = dict(data)
        try:
            geo = data.pop('geo_aug', {})
            geo_aug = GeoAugSpec(enabled=geo.get('enabled', True), yaw_range=geo.get('yaw_range', math.pi),
                                 scale_range=tuple(geo.get('scale_range', (0.9, 1.1))))
            spec_aug = SpecAugSpec(**data.pop('spec_aug', {}))
            input_noise = InputNoiseSpec(**data.pop('input_noise', {}))
            return cls(geo_aug=geo_aug, spec_aug=spec_aug, input_noise=input_noise, seed=seed,
                       deterministic=deterministic, show_progress=show_progress, **data)
        except TypeError as e:
            raise ConfigurationError(f"Invalid train configuration: {e}")
