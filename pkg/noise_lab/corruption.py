"""
Input corruption: clipped Gaussian noise and a structured estimator-noise emulation.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np

from motion_data.sequence import MotionSequence
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)

# scores assigned to emulated detector failures stay below the repair threshold
INVALID_SCORE_MAX = 0.09


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian perturbation (mm), each draw clamped to [-clip, clip]."""

    std: float = 25.0
    clip: float = 125.0
    seed: int = 0

    def __post_init__(self):
        if not self.std > 0:
            raise ConfigurationError(f"Noise std must be positive, got {self.std}")
        if self.clip < self.std:
            raise ConfigurationError(f"Noise clip ({self.clip}) must be >= std ({self.std})")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class StructuredNoiseSpec:
    """
    Emulated pose-estimator error.

    limb_bias_std: relative std of a per-sequence, per-joint scaling of the
        joint's offset from the mid-hip (constant over time)
    jitter_std: stationary std (mm) of AR(1) jitter per coordinate
    jitter_correlation: AR(1) coefficient in [0, 1)
    invalid_rate: probability of a failed detection per frame and person
    """

    limb_bias_std: float = 0.08
    jitter_std: float = 20.0
    jitter_correlation: float = 0.8
    invalid_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.limb_bias_std < 0 or self.jitter_std < 0:
            raise ConfigurationError("Structured noise magnitudes must be >= 0")
        if not 0 <= self.jitter_correlation < 1:
            raise ConfigurationError(f"jitter_correlation must be in [0, 1), got {self.jitter_correlation}")
        if not 0 <= self.invalid_rate < 1:
            raise ConfigurationError(f"invalid_rate must be in [0, 1), got {self.invalid_rate}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def gaussian_perturbation(rng: np.random.Generator, shape: Tuple[int, ...], std: float,
                          clip: float) -> np.ndarray:
    """Independent N(0, std^2) draws, each clamped to [-clip, clip]."""
    return np.clip(rng.normal(0.0, std, size=shape), -clip, clip)


def add_gaussian_noise(seq: MotionSequence, spec: NoiseSpec, stream: int = 0) -> MotionSequence:
    """
    Perturb every coordinate of ``seq`` independently.

    The clip bounds the perturbation, not the coordinate, and holds in the
    sequence's own dtype. ``stream`` selects an independent random stream
    under the same seed (one per corpus sequence).
    """
    rng = np.random.default_rng([spec.seed, stream])
    noise = gaussian_perturbation(rng, seq.data.shape, spec.std, spec.clip)
    data = seq.data.astype(np.float64)
    noisy = (data + noise).astype(seq.data.dtype)
    # rounding to the storage dtype can land one ulp past the clip; step back toward the clean value
    over = np.abs(noisy.astype(np.float64) - data) > spec.clip
    if over.any():
        noisy[over] = np.nextafter(noisy[over], seq.data[over])
    return seq.replace(data=noisy)


def _ar1_jitter(rng: np.random.Generator, shape: Tuple[int, ...], std: float, rho: float) -> np.ndarray:
    innovations = rng.normal(0.0, std * np.sqrt(1.0 - rho ** 2), size=shape)
    jitter = np.empty(shape)
    jitter[0] = rng.normal(0.0, std, size=shape[1:])
    for t in range(1, shape[0]):
        jitter[t] = rho * jitter[t - 1] + innovations[t]
    return jitter


def add_structured_noise(seq: MotionSequence, spec: StructuredNoiseSpec, stream: int = 0) -> MotionSequence:
    """
    Corrupt ``seq`` the way a pose estimator would.

    Every joint's offset from the person's mid-hip is scaled by a constant
    per-sequence factor, AR(1) jitter is added, and a fraction of frames is
    replaced by a failed detection: a displaced pose with a score below 0.1.
    The result always carries validity scores.
    """
    rng = np.random.default_rng([spec.seed, stream])
    frames, persons, joints, _ = seq.data.shape
    data = seq.data.astype(np.float64)

    layout = seq.layout
    mid_hip = 0.5 * (data[:, :, layout.left_hip_index] + data[:, :, layout.right_hip_index])[:, :, None]
    bias = 1.0 + rng.normal(0.0, spec.limb_bias_std, size=(1, persons, joints, 1))
    noisy = mid_hip + (data - mid_hip) * bias
    noisy += _ar1_jitter(rng, data.shape, spec.jitter_std, spec.jitter_correlation)

    validity = rng.uniform(0.5, 1.0, size=(frames, persons))
    failed = rng.random((frames, persons)) < spec.invalid_rate
    for p in range(persons):
        if failed[:, p].all():
            failed[0, p] = False
    if failed.any():
        displacement = rng.normal(0.0, 300.0, size=(int(failed.sum()), 1, 3))
        noisy[failed] += displacement
        validity[failed] = rng.uniform(0.0, INVALID_SCORE_MAX, size=int(failed.sum()))

    logger.debug(f"Structured noise on '{seq.name}': {int(failed.sum())} failed detections")
    return seq.replace(data=noisy.astype(seq.data.dtype), validity=validity)
