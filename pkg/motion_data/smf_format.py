"""
SMF sequence files: a JSON header plus a little-endian float32 blob per sequence.

Blob layout is frame-major, then person, then joint, then x, y, z, followed by
frames * persons validity scores when the header says ``has_validity``.
"""

import json
import logging
import os
from typing import List, Optional, Sequence

import numpy as np

from motion_data.joint_layout import JointLayout
from motion_data.sequence import MotionSequence
from utils.error_handler import DataError, LayoutError, SequenceFormatError
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

HEADER_SUFFIX = ".smf.json"
BLOB_SUFFIX = ".smf.bin"
BLOB_DTYPE = np.dtype('<f4')

REQUIRED_KEYS = ('name', 'fps', 'persons', 'frames', 'joints', 'joint_names',
                 'left_hip', 'right_hip', 'edges', 'has_validity')


def _header_for(seq: MotionSequence) -> dict:
    layout = seq.layout.to_dict()
    return {
        'name': seq.name,
        'fps': seq.fps,
        'persons': seq.persons,
        'frames': seq.frames,
        'joints': seq.joints,
        'joint_names': layout['joint_names'],
        'left_hip': layout['left_hip'],
        'right_hip': layout['right_hip'],
        'edges': layout['edges'],
        'has_validity': seq.validity is not None,
    }


def save_sequences(seqs: Sequence[MotionSequence], path: str) -> List[str]:
    """
    Write each sequence as ``<stem>.smf.json`` + ``<stem>.smf.bin``.

    Stems come from the sanitized sequence name; repeated names in one call get
    a numeric suffix. Coordinates are stored as float32, so float64 sequences
    are narrowed on save.

    Returns:
        Header paths in the order of ``seqs``
    """
    FileManager.ensure_directory(path)
    taken = set()
    written = []

    for seq in seqs:
        stem = FileManager.get_unique_stem(FileManager.clean_filename(seq.name), taken)
        if seq.data.dtype != np.float32:
            logger.debug(f"Sequence '{seq.name}' narrowed from {seq.data.dtype} to float32")

        blob = seq.data.astype(BLOB_DTYPE).tobytes()
        if seq.validity is not None:
            blob += seq.validity.astype(BLOB_DTYPE).tobytes()

        header_path = os.path.join(path, stem + HEADER_SUFFIX)
        try:
            FileManager.write_bytes_atomic(os.path.join(path, stem + BLOB_SUFFIX), blob)
            FileManager.write_json(header_path, _header_for(seq))
        except OSError as e:
            raise DataError(f"Cannot write sequence '{seq.name}': {e}", path=header_path)
        written.append(header_path)

    logger.info(f"Saved {len(written)} sequences to {path}")
    return written


def _read_header(header_path: str) -> dict:
    try:
        with open(header_path, 'r', encoding='utf-8') as f:
            header = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SequenceFormatError(f"Corrupt header: {e}", path=header_path)
    if not isinstance(header, dict):
        raise SequenceFormatError("Header must be a JSON object", path=header_path)
    missing = [key for key in REQUIRED_KEYS if key not in header]
    if missing:
        raise SequenceFormatError(f"Header lacks keys {missing}", path=header_path)
    return header


def load_sequence(header_path: str, layout: Optional[JointLayout] = None) -> MotionSequence:
    """Load one sequence; ``layout`` (when given) must match the header's joints."""
    header = _read_header(header_path)
    try:
        file_layout = JointLayout.from_dict(header)
        frames, persons, joints = int(header['frames']), int(header['persons']), int(header['joints'])
    except (LayoutError, TypeError, ValueError) as e:
        raise SequenceFormatError(f"Invalid header: {e}", path=header_path)

    if joints != file_layout.size:
        raise SequenceFormatError(f"Header declares {joints} joints but names {file_layout.size}",
                                  path=header_path)
    if layout is not None and layout.names != file_layout.names:
        raise SequenceFormatError(f"Joint names {file_layout.names} differ from expected layout",
                                  path=header_path)

    blob_path = header_path[:-len(HEADER_SUFFIX)] + BLOB_SUFFIX
    try:
        with open(blob_path, 'rb') as f:
            raw = f.read()
    except OSError as e:
        raise SequenceFormatError(f"Missing coordinate blob: {e}", path=blob_path)

    n_coords = frames * persons * joints * 3
    n_scores = frames * persons if header['has_validity'] else 0
    expected = (n_coords + n_scores) * BLOB_DTYPE.itemsize
    if len(raw) != expected:
        raise SequenceFormatError(
            f"Blob holds {len(raw)} bytes, header shape needs {expected}", path=blob_path)

    values = np.frombuffer(raw, dtype=BLOB_DTYPE).astype(np.float32)
    data = values[:n_coords].reshape(frames, persons, joints, 3)
    validity = values[n_coords:].reshape(frames, persons) if n_scores else None

    if not np.all(np.isfinite(values)):
        raise SequenceFormatError("Blob contains non-finite values", path=blob_path)

    try:
        return MotionSequence(
            name=str(header['name']),
            data=data,
            fps=float(header['fps']),
            layout=layout if layout is not None else file_layout,
            validity=validity,
        )
    except DataError as e:
        raise SequenceFormatError(str(e), path=header_path)


def list_headers(path: str) -> List[str]:
    if not os.path.isdir(path):
        raise DataError("Sequence directory does not exist", path=path)
    names = sorted(name for name in os.listdir(path) if name.endswith(HEADER_SUFFIX))
    return [os.path.join(path, name) for name in names]


def load_sequences(path: str, layout: Optional[JointLayout] = None) -> List[MotionSequence]:
    """Load every sequence of a directory in lexicographic header-filename order."""
    seqs = [load_sequence(header, layout) for header in list_headers(path)]
    logger.info(f"Loaded {len(seqs)} sequences from {path}")
    return seqs
