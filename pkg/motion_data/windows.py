"""
Windowing, mid-hip centering and multi-person merging of forecast samples.
"""

import logging
from enum import Enum
from typing import List, Sequence

import numpy as np

from motion_data.sequence import ForecastWindow, MotionSequence, WindowSpec
from utils.error_handler import DataError, ShapeMismatchError

logger = logging.getLogger(__name__)


class MergeAnchor(Enum):
    """How a merged multi-person window is anchored."""
    NONE = "none"
    SHARED_MEAN = "shared_mean"


def make_windows(seq: MotionSequence, spec: WindowSpec, merge: bool = False) -> List[ForecastWindow]:
    """
    Cut a sequence into (input, target) windows.

    Windows start at 0, stride, 2*stride, ... For multi-person sequences one
    window per person is emitted at every start (start-major order), unless
    ``merge`` is set, in which case the persons of each start are merged into
    one uncentered window. A sequence shorter than ``t_in + t_out`` gives an
    empty list.
    """
    count = spec.count(seq.frames)
    windows = []
    for k in range(count):
        start = k * spec.stride
        split = start + spec.t_in
        end = split + spec.t_out
        per_person = [
            ForecastWindow(
                input=seq.data[start:split, p],
                target=seq.data[split:end, p],
                fps=seq.fps,
                layout=seq.layout,
                source=seq.name if seq.persons == 1 else f"{seq.name}/p{p}",
                start=start,
            )
            for p in range(seq.persons)
        ]
        if merge and seq.persons > 1:
            merged = merge_persons(per_person, MergeAnchor.NONE)
            windows.append(merged.replace(source=seq.name))
        else:
            windows.extend(per_person)

    if count == 0:
        logger.debug(f"Sequence '{seq.name}' ({seq.frames} frames) too short for {spec}")
    return windows


def anchor_point(w: ForecastWindow) -> np.ndarray:
    """Mean of the persons' mid-hips in the last input frame (float64)."""
    last = w.input[-1].astype(np.float64).reshape(w.persons, w.layout.size, 3)
    mid_hips = 0.5 * (last[:, w.layout.left_hip_index] + last[:, w.layout.right_hip_index])
    return mid_hips.mean(axis=0)


def center_window(w: ForecastWindow) -> ForecastWindow:
    """Subtract the mid-hip of the last input frame from every coordinate.

    Centered coordinates are float64 whatever the storage dtype; models cast
    at their own boundary.
    """
    if w.centered:
        raise DataError(f"Window '{w.source}' at {w.start} is already centered")
    offset = anchor_point(w)
    return w.replace(input=w.input.astype(np.float64) - offset, target=w.target.astype(np.float64) - offset,
                     centered=True, offset=offset)


def uncenter_window(w: ForecastWindow) -> ForecastWindow:
    """Add the stored centering offset back (float64)."""
    if not w.centered:
        raise DataError(f"Window '{w.source}' at {w.start} is not centered")
    return w.replace(input=w.input.astype(np.float64) + w.offset, target=w.target.astype(np.float64) + w.offset,
                     centered=False, offset=np.zeros(3))


def uncenter_frames(frames: np.ndarray, w: ForecastWindow) -> np.ndarray:
    """Move a prediction made for a centered window back to global coordinates."""
    if not w.centered:
        return np.asarray(frames)
    return np.asarray(frames, dtype=np.float64) + w.offset


def translate_window(w: ForecastWindow, v: Sequence[float]) -> ForecastWindow:
    """Rigidly translate input and target; the centering offset moves along."""
    shift = np.asarray(v, dtype=np.float64).reshape(3)
    if w.centered:
        return w.replace(offset=w.offset + shift)
    cast = shift.astype(w.input.dtype)
    return w.replace(input=w.input + cast, target=w.target + cast)


def merge_persons(windows: Sequence[ForecastWindow],
                  anchor: MergeAnchor = MergeAnchor.SHARED_MEAN) -> ForecastWindow:
    """
    Concatenate single-person windows along the joint axis, in list order.

    Centered inputs are uncentered first, so inter-person geometry is kept.
    With ``MergeAnchor.SHARED_MEAN`` the merged window is centered on the mean
    of all persons' mid-hips in the last input frame.
    """
    if not windows:
        raise DataError("merge_persons needs at least one window")
    first = windows[0]
    for w in windows[1:]:
        if (w.t_in, w.t_out, w.fps, w.layout) != (first.t_in, first.t_out, first.fps, first.layout):
            raise ShapeMismatchError("Windows to merge must share t_in, t_out, fps and layout")

    plain = [uncenter_window(w) if w.centered else w for w in windows]
    merged = ForecastWindow(
        input=np.concatenate([w.input for w in plain], axis=1),
        target=np.concatenate([w.target for w in plain], axis=1),
        fps=first.fps,
        layout=first.layout,
        persons=sum(w.persons for w in plain),
        source=first.source,
        start=first.start,
    )
    if anchor is MergeAnchor.SHARED_MEAN:
        merged = center_window(merged)
    return merged


def split_merged(w: ForecastWindow) -> List[ForecastWindow]:
    """Split a merged window into uncentered single-person windows."""
    plain = uncenter_window(w) if w.centered else w
    size = w.layout.size
    return [
        ForecastWindow(
            input=plain.input[:, p * size:(p + 1) * size],
            target=plain.target[:, p * size:(p + 1) * size],
            fps=w.fps,
            layout=w.layout,
            source=f"{w.source}/p{p}",
            start=w.start,
        )
        for p in range(w.persons)
    ]
