"""
Evaluation horizons in milliseconds and their output frame indices.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from utils.error_handler import ConfigurationError


@dataclass(frozen=True)
class HorizonSet:
    """Sorted evaluation times (ms) at an output frame rate (Hz)."""

    horizons_ms: Tuple[float, ...]
    fps: float

    def __post_init__(self):
        horizons = tuple(sorted(float(h) for h in self.horizons_ms))
        if not horizons or horizons[0] <= 0:
            raise ConfigurationError(f"Horizons must be positive, got {self.horizons_ms}")
        if not self.fps > 0:
            raise ConfigurationError(f"Horizon fps must be positive, got {self.fps}")
        object.__setattr__(self, 'horizons_ms', horizons)

    @classmethod
    def of(cls, horizons_ms: Sequence[float], fps: float) -> "HorizonSet":
        return cls(tuple(horizons_ms), fps)

    def frame_index(self, horizon_ms: float) -> int:
        """round(h * fps / 1000) - 1: at 25 Hz, 400 ms -> 9 and 1000 ms -> 24."""
        return int(math.floor(horizon_ms * self.fps / 1000.0 + 0.5)) - 1

    def indices(self, t_out: int) -> List[int]:
        """Frame index of every horizon, checked against the output length."""
        indices = [self.frame_index(h) for h in self.horizons_ms]
        for h, index in zip(self.horizons_ms, indices):
            if not 0 <= index < t_out:
                raise ConfigurationError(
                    f"Horizon {h:g} ms maps to frame {index}, outside the {t_out} output frames")
        return indices

    def labels(self) -> List[str]:
        return [f"{h:g}" for h in self.horizons_ms]
