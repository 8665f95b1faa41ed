"""
Sequence-level transformations applied between import and windowing.
"""

import logging
from typing import List, Sequence

import numpy as np

from motion_data.joint_layout import JointLayout, validate_mapping
from motion_data.sequence import MotionSequence
from utils.error_handler import DataError

logger = logging.getLogger(__name__)

# legacy dataset unit: scaled inches
SI2M = (1.0 / 0.45) * 2.54 / 100.0
LEGACY_SCALE = (10 * 3 / 1.8 * SI2M) / 1.8


def scale_correct_legacy(value: float) -> float:
    """Convert a length in legacy scaled-inch units to meters."""
    if not np.isfinite(value):
        raise DataError(f"Cannot scale non-finite value {value}")
    return value * LEGACY_SCALE


def convert_units(seq: MotionSequence, scale: float) -> MotionSequence:
    """Multiply all coordinates by ``scale`` (the only unit conversion, done at import)."""
    if not (np.isfinite(scale) and scale > 0):
        raise DataError(f"Unit scale must be positive, got {scale}")
    if scale == 1.0:
        return seq
    return seq.replace(data=seq.data * seq.data.dtype.type(scale))


def downsample(seq: MotionSequence, factor: int) -> MotionSequence:
    """Keep frames 0, factor, 2*factor, ... and divide the frame rate by ``factor``."""
    if factor < 1:
        raise DataError(f"Downsample factor must be >= 1, got {factor}")
    if factor == 1:
        return seq
    validity = None if seq.validity is None else seq.validity[::factor]
    return seq.replace(data=seq.data[::factor], fps=seq.fps / factor, validity=validity)


def select_joints(seq: MotionSequence, target_layout: JointLayout,
                  mapping: Sequence[int]) -> MotionSequence:
    """
    Reorder or subset joints: target joint ``i`` is source joint ``mapping[i]``.

    Duplicate source indices are allowed and give duplicated columns.
    """
    validate_mapping(mapping, seq.joints, target_layout)
    indices = np.asarray(mapping, dtype=np.int64)
    return seq.replace(data=seq.data[:, :, indices], layout=target_layout)


def fill_invalid_frames(seq: MotionSequence, threshold: float = 0.1) -> MotionSequence:
    """
    Replace frames whose detection score is below ``threshold``.

    Each person is repaired independently: an invalid frame takes the joints
    (and score) of the nearest preceding valid frame; invalid frames before the
    first valid one take the first valid frame. The result has no score below
    the threshold, which makes the operation idempotent.
    """
    if seq.validity is None:
        raise DataError(f"Sequence '{seq.name}' has no validity scores to repair")

    data = np.array(seq.data)
    validity = np.array(seq.validity)
    replaced = 0

    for p in range(seq.persons):
        valid = validity[:, p] >= threshold
        if not valid.any():
            raise DataError(f"Sequence '{seq.name}' has no valid frame for person {p}")
        if valid.all():
            continue
        positions = np.where(valid, np.arange(seq.frames), -1)
        source = np.maximum.accumulate(positions)
        source[source < 0] = np.argmax(valid)
        invalid = ~valid
        data[invalid, p] = data[source[invalid], p]
        validity[invalid, p] = validity[source[invalid], p]
        replaced += int(invalid.sum())

    if replaced == 0:
        return seq
    logger.debug(f"Sequence '{seq.name}': replaced {replaced} invalid person-frames")
    return seq.replace(data=data, validity=validity)


def split_persons(seq: MotionSequence) -> List[MotionSequence]:
    """Split a multi-person sequence into single-person sequences."""
    if seq.persons == 1:
        return [seq]
    return [
        MotionSequence(
            name=f"{seq.name}_p{p}",
            data=seq.data[:, p:p + 1],
            fps=seq.fps,
            layout=seq.layout,
            validity=None if seq.validity is None else seq.validity[:, p:p + 1],
        )
        for p in range(seq.persons)
    ]


def select_best_person(seq: MotionSequence) -> MotionSequence:
    """Keep only the person with the best mean detection score."""
    if seq.persons == 1:
        return seq
    if seq.validity is None:
        raise DataError(f"Sequence '{seq.name}' has no scores to rank persons by")
    best = int(np.argmax(seq.validity.mean(axis=0)))
    return seq.replace(data=seq.data[:, best:best + 1], validity=seq.validity[:, best:best + 1])
