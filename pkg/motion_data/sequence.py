"""
Motion sequences and forecast windows.

Coordinates are millimeters everywhere. Arrays held by these types are made
read-only on construction, so instances can be shared between threads.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from motion_data.joint_layout import JointLayout
from utils.error_handler import DataError, ShapeMismatchError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """Frames x persons x joints x 3 coordinates, with frame rate and layout."""

    name: str
    data: np.ndarray
    fps: float
    layout: JointLayout
    validity: Optional[np.ndarray] = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float64)
        if data.ndim != 4 or data.shape[-1] != 3:
            raise ShapeMismatchError(f"Sequence '{self.name}' must be [frames][persons][joints][3], got {data.shape}")
        frames, persons, joints, _ = data.shape
        if frames < 1 or persons < 1:
            raise ShapeMismatchError(f"Sequence '{self.name}' needs at least one frame and one person")
        if joints != self.layout.size:
            raise ShapeMismatchError(
                f"Sequence '{self.name}' has {joints} joints, layout has {self.layout.size}")
        if not np.all(np.isfinite(data)):
            raise DataError(f"Sequence '{self.name}' contains non-finite coordinates")
        if not (np.isfinite(self.fps) and self.fps > 0):
            raise DataError(f"Sequence '{self.name}' has invalid fps {self.fps}")
        object.__setattr__(self, 'data', _frozen(data))
        object.__setattr__(self, 'fps', float(self.fps))

        if self.validity is not None:
            validity = np.asarray(self.validity, dtype=data.dtype)
            if validity.shape != (frames, persons):
                raise ShapeMismatchError(
                    f"Validity of '{self.name}' must be [{frames}][{persons}], got {validity.shape}")
            if not np.all((validity >= 0) & (validity <= 1)):
                raise DataError(f"Validity scores of '{self.name}' must lie in [0, 1]")
            object.__setattr__(self, 'validity', _frozen(validity))

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def persons(self) -> int:
        return self.data.shape[1]

    @property
    def joints(self) -> int:
        return self.data.shape[2]

    def replace(self, **changes) -> "MotionSequence":
        return replace(self, **changes)

    def astype(self, dtype) -> "MotionSequence":
        """Copy with coordinates (and scores) cast to ``dtype``."""
        validity = None if self.validity is None else self.validity.astype(dtype)
        return replace(self, data=self.data.astype(dtype), validity=validity)


@dataclass(frozen=True)
class WindowSpec:
    """Input length, output length and stride of forecast windows, in frames."""

    t_in: int
    t_out: int
    stride: int = 1

    def __post_init__(self):
        if self.t_in < 2 or self.t_out < 1 or self.stride < 1:
            raise DataError(f"Invalid window spec t_in={self.t_in}, t_out={self.t_out}, stride={self.stride}")

    @classmethod
    def for_output(cls, t_out: int, stride: int = 1) -> "WindowSpec":
        """Default spec with twice as many input frames as output frames."""
        return cls(t_in=2 * t_out, t_out=t_out, stride=stride)

    @property
    def length(self) -> int:
        return self.t_in + self.t_out

    def count(self, frames: int) -> int:
        if frames < self.length:
            return 0
        return (frames - self.length) // self.stride + 1


@dataclass(frozen=True, eq=False)
class ForecastWindow:
    """
    One (input, target) sample.

    ``persons`` is greater than one for merged multi-person windows, whose joint
    axis holds ``persons * layout.size`` joints in person order. ``offset`` is the
    translation that was subtracted by centering (zero when not centered).
    """

    input: np.ndarray
    target: np.ndarray
    fps: float
    layout: JointLayout
    centered: bool = False
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    persons: int = 1
    source: str = ""
    start: int = 0

    def __post_init__(self):
        inputs = np.asarray(self.input)
        target = np.asarray(self.target)
        if inputs.dtype not in (np.float32, np.float64):
            inputs = inputs.astype(np.float64)
        if target.dtype != inputs.dtype:
            target = target.astype(inputs.dtype)
        if inputs.ndim != 3 or target.ndim != 3 or inputs.shape[1:] != target.shape[1:] or inputs.shape[2] != 3:
            raise ShapeMismatchError(
                f"Window input {inputs.shape} and target {target.shape} must be [T][J][3] with equal J")
        if inputs.shape[1] != self.persons * self.layout.size:
            raise ShapeMismatchError(
                f"Window has {inputs.shape[1]} joints, expected {self.persons} x {self.layout.size}")
        offset = np.asarray(self.offset, dtype=np.float64).reshape(3)
        object.__setattr__(self, 'input', _frozen(inputs))
        object.__setattr__(self, 'target', _frozen(target))
        object.__setattr__(self, 'offset', _frozen(offset))

    @property
    def t_in(self) -> int:
        return self.input.shape[0]

    @property
    def t_out(self) -> int:
        return self.target.shape[0]

    @property
    def joints(self) -> int:
        return self.input.shape[1]

    def replace(self, **changes) -> "ForecastWindow":
        return replace(self, **changes)

    def as_person_tensor(self, frames: np.ndarray) -> np.ndarray:
        """Reshape a [T][persons*J][3] array of this window to [T][persons][J][3]."""
        return np.asarray(frames).reshape(frames.shape[0], self.persons, self.layout.size, 3)
