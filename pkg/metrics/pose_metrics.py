"""
Position error metrics (MPJPE, VIM) and the real-time metrics (FADE, FCE).

Tensors are [T][P][J][3] in millimeters: frames, persons, joints, coordinates.
"""

import math

import numpy as np

from utils.error_handler import ConfigurationError, DataError, ShapeMismatchError

# ISO 13855 hand/limb approach speed
LIMB_SPEED_MM_PER_S = 2000.0


def _frame_errors(gt: np.ndarray, pred: np.ndarray, frame_index: int) -> np.ndarray:
    gt = np.asarray(gt, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gt.shape != pred.shape:
        raise ShapeMismatchError(f"Ground truth {gt.shape} and prediction {pred.shape} differ")
    if gt.ndim != 4 or gt.shape[-1] != 3:
        raise ShapeMismatchError(f"Expected [T][P][J][3] tensors, got {gt.shape}")
    if not 0 <= frame_index < gt.shape[0]:
        raise DataError(f"Frame index {frame_index} outside [0, {gt.shape[0]})")
    diff = gt[frame_index] - pred[frame_index]
    if not np.all(np.isfinite(diff)):
        raise DataError("Metric inputs must be finite")
    return diff


def mpjpe(gt: np.ndarray, pred: np.ndarray, frame_index: int) -> float:
    """Mean over persons and joints of the Euclidean joint distance at one frame."""
    diff = _frame_errors(gt, pred, frame_index)
    return float(np.linalg.norm(diff, axis=-1).mean())


def vim(gt: np.ndarray, pred: np.ndarray, frame_index: int) -> float:
    """Norm of each person's concatenated 3*J error vector at one frame, averaged over persons."""
    diff = _frame_errors(gt, pred, frame_index)
    per_person = np.sqrt(np.sum(diff.reshape(diff.shape[0], -1) ** 2, axis=1))
    return float(per_person.mean())


def mpjpe_per_frame(gt: np.ndarray, pred: np.ndarray) -> np.ndarray:
    """MPJPE of every frame: [T]."""
    gt = np.asarray(gt, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if gt.shape != pred.shape:
        raise ShapeMismatchError(f"Ground truth {gt.shape} and prediction {pred.shape} differ")
    return np.linalg.norm(gt - pred, axis=-1).reshape(gt.shape[0], -1).mean(axis=1)


def fade(mpjpe_t: float, t_ms: float, fps: float) -> float:
    """Forecast-after-delay error: MPJPE grown by the share of the horizon spent computing."""
    if not t_ms > 0:
        raise ConfigurationError(f"Horizon must be positive, got {t_ms} ms")
    if not fps > 0:
        raise ConfigurationError(f"FPS must be positive, got {fps}")
    return mpjpe_t + mpjpe_t * (1000.0 / t_ms) * (1.0 / fps)


def fce(fps: float) -> float:
    """Fast-change error: limb travel at 2000 mm/s during one forecast interval."""
    if not fps > 0:
        raise ConfigurationError(f"FPS must be positive, got {fps}")
    return LIMB_SPEED_MM_PER_S / fps


def _round_half_up(value: float, decimals: int) -> float:
    factor = 10 ** decimals
    return math.floor(value * factor + 0.5) / factor


def format_metric(value, integer: bool = False) -> str:
    """
    Display rounding of table cells.

    Values >= 100 (or any value with ``integer``) are shown as integers, smaller
    values with one decimal; ``None`` is shown as "-".
    """
    if value is None:
        return "-"
    if integer or value >= 100:
        return str(int(_round_half_up(value, 0)))
    return f"{_round_half_up(value, 1):.1f}"
