"""
MotionConformer: a Conformer encoder that maps input pose frames to future pose frames.

The network sees centered coordinates as a (batch, t_in, J*3) tensor, runs the
conformer blocks, reduces time by ``reduction_factor`` (at the start or the end
of the block stack) and predicts per-frame offsets that are added to the last
input frame.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict

import numpy as np
import torch
from torch import Tensor, nn

from forecasters.base_forecaster import BaseForecaster
from forecasters.conformer_blocks import ConformerBlock, TimeReduction, count_parameters
from utils.error_handler import ConfigurationError, ShapeMismatchError

logger = logging.getLogger(__name__)

REDUCTION_POSITIONS = ("start", "end")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; the defaults are the desk-scale model."""

    d_model: int = 96
    n_blocks: int = 4
    n_heads: int = 4
    conv_kernel: int = 9
    ff_expansion: int = 4
    dropout: float = 0.1
    t_in: int = 50
    t_out: int = 25
    joints: int = 13
    reduction_factor: int = 2
    reduction_position: str = "end"
    # the network works in meters internally
    coord_scale: float = 0.001

    def __post_init__(self):
        if min(self.d_model, self.n_blocks, self.n_heads, self.ff_expansion, self.joints) < 1:
            raise ConfigurationError(f"Model sizes must be positive: {self}")
        if self.d_model % self.n_heads:
            raise ConfigurationError(f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ConfigurationError(f"conv_kernel must be odd, got {self.conv_kernel}")
        if not 0 <= self.dropout < 1:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.reduction_factor < 1 or self.t_out < 1 or self.t_in != self.reduction_factor * self.t_out:
            raise ConfigurationError(
                f"t_in ({self.t_in}) must equal reduction_factor ({self.reduction_factor}) x t_out ({self.t_out})")
        if self.reduction_position not in REDUCTION_POSITIONS:
            raise ConfigurationError(
                f"reduction_position must be one of {REDUCTION_POSITIONS}, got '{self.reduction_position}'")
        if not self.coord_scale > 0:
            raise ConfigurationError(f"coord_scale must be positive, got {self.coord_scale}")

    @classmethod
    def large(cls, **overrides) -> "ModelConfig":
        """Wide and deep preset with roughly nine million parameters."""
        return replace(cls(d_model=192, n_blocks=11, n_heads=4, conv_kernel=31, dropout=0.1), **overrides)

    @property
    def channels(self) -> int:
        return self.joints * 3

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown model config keys: {sorted(unknown)}")
        return cls(**data)


class MotionConformer(nn.Module):
    """(B, t_in, J*3) centered millimeters -> (B, t_out, J*3) centered millimeters."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.input_projection = nn.Linear(cfg.channels, cfg.d_model)
        self.position = nn.Parameter(torch.zeros(1, cfg.t_in, cfg.d_model))
        nn.init.normal_(self.position, std=0.02)
        self.blocks = nn.ModuleList(
            ConformerBlock(cfg.d_model, cfg.n_heads, cfg.conv_kernel, cfg.ff_expansion, cfg.dropout)
            for _ in range(cfg.n_blocks)
        )
        self.reduction = TimeReduction(cfg.d_model, cfg.reduction_factor)
        self.head = nn.Linear(cfg.d_model, cfg.channels)
        # zero head: an untrained model repeats the last input frame
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x: Tensor) -> Tensor:
        cfg = self.cfg
        if x.ndim != 3 or x.shape[1:] != (cfg.t_in, cfg.channels):
            raise ShapeMismatchError(
                f"MotionConformer expects (B, {cfg.t_in}, {cfg.channels}), got {tuple(x.shape)}")
        h = self.input_projection(x * cfg.coord_scale) + self.position
        if cfg.reduction_position == "start":
            h = self.reduction(h)
        for block in self.blocks:
            h = block(h)
        if cfg.reduction_position == "end":
            h = self.reduction(h)
        offsets = self.head(h) / cfg.coord_scale
        return x[:, -1:, :] + offsets

    def inner_length(self) -> int:
        """Sequence length seen by the conformer blocks."""
        if self.cfg.reduction_position == "start":
            return self.cfg.t_out
        return self.cfg.t_in


def build_model(cfg: ModelConfig, seed: int = 0) -> MotionConformer:
    """Construct a MotionConformer with seed-determined initial weights."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = MotionConformer(cfg)
    logger.info(f"Built MotionConformer with {count_parameters(model):,} parameters "
                f"(d_model={cfg.d_model}, blocks={cfg.n_blocks}, reduction at {cfg.reduction_position})")
    return model


class ConformerForecaster(BaseForecaster):
    """Inference wrapper that runs a MotionConformer in evaluation mode."""

    name = "motion_conformer"

    def __init__(self, model: MotionConformer):
        super().__init__(model.cfg.t_out)
        self.model = model

    @property
    def cfg(self) -> ModelConfig:
        return self.model.cfg

    @property
    def param_count(self) -> int:
        return count_parameters(self.model)

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        inputs = self.check_inputs(inputs)
        if inputs.shape[1:3] != (self.cfg.t_in, self.cfg.joints):
            raise ShapeMismatchError(
                f"{self.name} expects [B][{self.cfg.t_in}][{self.cfg.joints}][3], got {inputs.shape}")
        param = next(self.model.parameters())
        x = torch.as_tensor(inputs.reshape(inputs.shape[0], self.cfg.t_in, -1), dtype=param.dtype)
        self.model.eval()
        with torch.no_grad():
            out = self.model(x).cpu().numpy()
        out = out.reshape(inputs.shape[0], self.cfg.t_out, self.cfg.joints, 3)
        return self.check_outputs(out.astype(inputs.dtype, copy=False))
