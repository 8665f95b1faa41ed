"""
Joint layouts: names, hip indices and the edges used to draw a skeleton.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from utils.error_handler import LayoutError


@dataclass(frozen=True)
class JointLayout:
    """Ordered joint names of one person plus the hips used for centering."""

    names: Tuple[str, ...]
    left_hip_index: int
    right_hip_index: int
    edges: Tuple[Tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'names', tuple(self.names))
        object.__setattr__(self, 'edges', tuple((int(a), int(b)) for a, b in self.edges))

        if len(set(self.names)) != len(self.names):
            raise LayoutError(f"Joint names must be unique: {self.names}")
        size = len(self.names)
        for index in (self.left_hip_index, self.right_hip_index):
            if not 0 <= index < size:
                raise LayoutError(f"Hip index {index} outside layout of {size} joints")
        if self.left_hip_index == self.right_hip_index:
            raise LayoutError("Left and right hip indices must differ")
        for a, b in self.edges:
            if not (0 <= a < size and 0 <= b < size):
                raise LayoutError(f"Edge ({a}, {b}) references a joint outside the layout")

    @property
    def size(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutError(f"Joint '{name}' not in layout")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'joint_names': list(self.names),
            'left_hip': self.left_hip_index,
            'right_hip': self.right_hip_index,
            'edges': [list(edge) for edge in self.edges],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "JointLayout":
        try:
            return cls(
                names=tuple(data['joint_names']),
                left_hip_index=int(data['left_hip']),
                right_hip_index=int(data['right_hip']),
                edges=tuple(tuple(edge) for edge in data.get('edges', [])),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise LayoutError(f"Malformed layout description: {e}")


# 2 hips, 2 shoulders, nose, 2 knees, 2 ankles, 2 elbows, 2 wrists
DEFAULT_JOINT_NAMES = (
    "hip_left", "hip_right",
    "shoulder_left", "shoulder_right",
    "nose",
    "knee_left", "knee_right",
    "ankle_left", "ankle_right",
    "elbow_left", "elbow_right",
    "wrist_left", "wrist_right",
)

DEFAULT_EDGES = (
    (0, 1), (0, 5), (5, 7), (1, 6), (6, 8),
    (0, 2), (1, 3), (2, 3),
    (2, 9), (9, 11), (3, 10), (10, 12),
    (2, 4), (3, 4),
)

DEFAULT_LAYOUT = JointLayout(
    names=DEFAULT_JOINT_NAMES,
    left_hip_index=0,
    right_hip_index=1,
    edges=DEFAULT_EDGES,
)


def mapping_by_names(source: JointLayout, target: JointLayout,
                     substitutions: Optional[Dict[str, str]] = None) -> List[int]:
    """
    Build a ``select_joints`` mapping from joint names.

    Args:
        source: Layout of the sequences being converted
        target: Layout to convert to
        substitutions: Target name -> source name, used only when the target
            name is missing from the source (e.g. ``{"nose": "head_top"}``)

    Returns:
        Source index for every target joint
    """
    substitutions = substitutions or {}
    mapping = []
    for name in target.names:
        if name in source.names:
            mapping.append(source.index_of(name))
        elif name in substitutions and substitutions[name] in source.names:
            mapping.append(source.index_of(substitutions[name]))
        else:
            raise LayoutError(f"No source joint for target joint '{name}'")
    return mapping


def validate_mapping(mapping: Sequence[int], source_size: int, target: JointLayout):
    if len(mapping) != target.size:
        raise LayoutError(f"Mapping has {len(mapping)} entries, target layout has {target.size} joints")
    for index in mapping:
        if not 0 <= int(index) < source_size:
            raise LayoutError(f"Mapping index {index} outside source layout of {source_size} joints")
