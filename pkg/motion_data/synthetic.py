"""
Seeded synthetic motion corpus with the default 13-joint layout.

Every person walks on a straight line (constant pelvis velocity) while legs and
arms swing sinusoidally. Joints are built by forward kinematics from fixed
segment lengths, so limb lengths never change within a sequence.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from motion_data.joint_layout import DEFAULT_LAYOUT
from motion_data.sequence import MotionSequence
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)

UP = np.array([0.0, 1.0, 0.0])

# segment lengths of a 1.0-scale body in mm
PELVIS_HEIGHT = 950.0
HIP_HALF_WIDTH = 100.0
TORSO_LENGTH = 500.0
SHOULDER_HALF_WIDTH = 180.0
NECK_LENGTH = 200.0
NOSE_FORWARD = 90.0
THIGH_LENGTH = 450.0
SHIN_LENGTH = 430.0
UPPER_ARM_LENGTH = 300.0
FOREARM_LENGTH = 260.0


@dataclass(frozen=True)
class MotionParams:
    """Ranges the per-sequence motion parameters are drawn from."""

    speed_range: Tuple[float, float] = (0.0, 1500.0)        # mm/s
    amplitude_range: Tuple[float, float] = (0.1, 0.6)       # rad
    frequency_range: Tuple[float, float] = (0.4, 1.2)       # Hz
    body_scale_range: Tuple[float, float] = (0.9, 1.1)
    turn_rate_range: Tuple[float, float] = (0.0, 0.0)       # rad/s, body yaw only

    def __post_init__(self):
        for name, (low, high) in asdict(self).items():
            if low > high:
                raise ConfigurationError(f"MotionParams.{name}: lower bound above upper bound")
        if self.body_scale_range[0] <= 0:
            raise ConfigurationError("MotionParams.body_scale_range must be positive")
        if self.frequency_range[0] < 0 or self.speed_range[0] < 0:
            raise ConfigurationError("MotionParams speed and frequency must be nonnegative")

    @classmethod
    def static(cls) -> "MotionParams":
        """Parameters giving motionless sequences."""
        return cls(speed_range=(0.0, 0.0), amplitude_range=(0.0, 0.0),
                   frequency_range=(0.0, 0.0), body_scale_range=(1.0, 1.0))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MotionParams":
        return cls(**{key: tuple(value) for key, value in data.items()})


def _swing(angle: np.ndarray, forward: np.ndarray) -> np.ndarray:
    """Unit vectors hanging down, rotated forward by ``angle`` (radians)."""
    return -np.cos(angle)[:, None] * UP + np.sin(angle)[:, None] * forward


def _person(rng: np.random.Generator, times: np.ndarray, params: MotionParams,
            origin: np.ndarray) -> np.ndarray:
    scale = rng.uniform(*params.body_scale_range)
    speed = rng.uniform(*params.speed_range)
    amplitude = rng.uniform(*params.amplitude_range)
    frequency = rng.uniform(*params.frequency_range)
    heading = rng.uniform(-np.pi, np.pi)
    turn_rate = rng.uniform(*params.turn_rate_range)
    phase = rng.uniform(-np.pi, np.pi)

    direction = np.array([np.cos(heading), 0.0, np.sin(heading)])
    pelvis = origin + PELVIS_HEIGHT * scale * UP + times[:, None] * speed * direction

    yaw = heading + turn_rate * times
    forward = np.stack([np.cos(yaw), np.zeros_like(yaw), np.sin(yaw)], axis=1)
    lateral = np.stack([-np.sin(yaw), np.zeros_like(yaw), np.cos(yaw)], axis=1)

    swing = amplitude * np.sin(2 * np.pi * frequency * times + phase)
    bend = 0.5 * amplitude * (1 + np.sin(2 * np.pi * frequency * times + phase - np.pi / 2))

    hip_l = pelvis + HIP_HALF_WIDTH * scale * lateral
    hip_r = pelvis - HIP_HALF_WIDTH * scale * lateral
    chest = pelvis + TORSO_LENGTH * scale * UP
    shoulder_l = chest + SHOULDER_HALF_WIDTH * scale * lateral
    shoulder_r = chest - SHOULDER_HALF_WIDTH * scale * lateral
    nose = chest + NECK_LENGTH * scale * UP + NOSE_FORWARD * scale * forward

    knee_l = hip_l + THIGH_LENGTH * scale * _swing(swing, forward)
    knee_r = hip_r + THIGH_LENGTH * scale * _swing(-swing, forward)
    ankle_l = knee_l + SHIN_LENGTH * scale * _swing(swing - bend, forward)
    ankle_r = knee_r + SHIN_LENGTH * scale * _swing(-swing - bend, forward)

    elbow_l = shoulder_l + UPPER_ARM_LENGTH * scale * _swing(-swing, forward)
    elbow_r = shoulder_r + UPPER_ARM_LENGTH * scale * _swing(swing, forward)
    wrist_l = elbow_l + FOREARM_LENGTH * scale * _swing(-swing + bend, forward)
    wrist_r = elbow_r + FOREARM_LENGTH * scale * _swing(swing + bend, forward)

    joints = [hip_l, hip_r, shoulder_l, shoulder_r, nose, knee_l, knee_r,
              ankle_l, ankle_r, elbow_l, elbow_r, wrist_l, wrist_r]
    return np.stack(joints, axis=1)


def synth_corpus(seed: int, count: int, fps: float = 25.0, frames: int = 300,
                 persons: int = 1, motion_params: Optional[MotionParams] = None,
                 name_prefix: str = "synth") -> List[MotionSequence]:
    """
    Generate ``count`` float64 sequences, bit-identical for equal arguments.

    Persons of one sequence start 1.5 m apart along the x axis.
    """
    if count < 1 or frames < 1 or persons < 1:
        raise ConfigurationError(f"Invalid corpus size count={count}, frames={frames}, persons={persons}")
    if not fps > 0:
        raise ConfigurationError(f"fps must be positive, got {fps}")
    params = motion_params or MotionParams()

    rng = np.random.default_rng(seed)
    times = np.arange(frames, dtype=np.float64) / fps
    corpus = []
    for i in range(count):
        people = [
            _person(rng, times, params, origin=np.array([1500.0 * p, 0.0, 0.0]))
            for p in range(persons)
        ]
        corpus.append(MotionSequence(
            name=f"{name_prefix}_{i:04d}",
            data=np.stack(people, axis=1),
            fps=fps,
            layout=DEFAULT_LAYOUT,
        ))

    logger.info(f"Generated {count} synthetic sequences (seed {seed}, {frames} frames at {fps} Hz)")
    return corpus


def segment_lengths(seq: MotionSequence) -> np.ndarray:
    """Edge lengths per frame and person: [frames][persons][edges]."""
    edges = np.asarray(seq.layout.edges)
    diffs = seq.data[:, :, edges[:, 0]] - seq.data[:, :, edges[:, 1]]
    return np.linalg.norm(diffs.astype(np.float64), axis=-1)
