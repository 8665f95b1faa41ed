"""
Training-time augmentation: yaw/scale of whole windows and SpecAug-style masking.

Coordinates are y-up, so yaw is a rotation about the y axis.
"""

from typing import Tuple

import numpy as np

from motion_data.sequence import ForecastWindow
from training.config import GeoAugSpec, SpecAugSpec
from utils.error_handler import DataError, ShapeMismatchError


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, 0.0, s],
                     [0.0, 1.0, 0.0],
                     [-s, 0.0, c]])


def rotate_scale(frames: np.ndarray, yaw: float, scale: float) -> np.ndarray:
    """Apply one yaw rotation and one uniform scale to [..., 3] coordinates."""
    frames = np.asarray(frames)
    out = (frames.astype(np.float64) @ yaw_matrix(yaw).T) * scale
    return out.astype(frames.dtype)


def sample_geometry(spec: GeoAugSpec, rng: np.random.Generator) -> Tuple[float, float]:
    yaw = rng.uniform(-spec.yaw_range, spec.yaw_range) if spec.yaw_range > 0 else 0.0
    low, high = spec.scale_range
    scale = rng.uniform(low, high) if high > low else low
    return float(yaw), float(scale)


def geometric_augment(w: ForecastWindow, yaw_range: float, scale_range: Tuple[float, float],
                      rng: np.random.Generator) -> ForecastWindow:
    """Rotate and scale input and target of a centered window with one shared transform."""
    if not w.centered:
        raise DataError(f"geometric_augment expects a centered window; '{w.source}' at {w.start} is not")
    yaw, scale = sample_geometry(GeoAugSpec(True, yaw_range, tuple(scale_range)), rng)
    return w.replace(input=rotate_scale(w.input, yaw, scale), target=rotate_scale(w.target, yaw, scale))


def augment_batch(inputs: np.ndarray, targets: np.ndarray, spec: GeoAugSpec,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Per-sample geometric augmentation of [B][T][J][3] batches."""
    if not spec.enabled:
        return inputs, targets
    inputs = np.array(inputs)
    targets = np.array(targets)
    for b in range(inputs.shape[0]):
        yaw, scale = sample_geometry(spec, rng)
        inputs[b] = rotate_scale(inputs[b], yaw, scale)
        targets[b] = rotate_scale(targets[b], yaw, scale)
    return inputs, targets


def spec_augment_mask(shape: Tuple[int, int], spec: SpecAugSpec, rng: np.random.Generator) -> np.ndarray:
    """Boolean [T][C] mask, True where the input is zeroed."""
    frames, channels = shape
    mask = np.zeros(shape, dtype=bool)
    if not spec.enabled:
        return mask
    spec.check_axes(frames, channels)
    for _ in range(spec.time_masks):
        width = int(rng.integers(0, spec.time_mask_max + 1))
        start = int(rng.integers(0, frames - width + 1))
        mask[start:start + width, :] = True
    for _ in range(spec.channel_masks):
        width = int(rng.integers(0, spec.channel_mask_max + 1))
        start = int(rng.integers(0, channels - width + 1))
        mask[:, start:start + width] = True
    return mask


def spec_augment(x: np.ndarray, spec: SpecAugSpec, rng: np.random.Generator) -> np.ndarray:
    """
    Zero contiguous frame spans and channel spans of a [t_in][C] model input.

    Targets are never passed through here.
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise ShapeMismatchError(f"spec_augment expects [t_in][C], got {x.shape}")
    if not spec.enabled:
        return x
    out = np.array(x)
    out[spec_augment_mask(x.shape, spec, rng)] = 0
    return out
