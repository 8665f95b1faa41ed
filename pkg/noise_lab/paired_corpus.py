"""
Paired noisy/clean corpora and their on-disk form.

A corpus is stored as ``noisy/`` and ``clean/`` SMF directories plus a
``manifest.json`` that lists the pairs and records how the noise was made.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from motion_data.joint_layout import JointLayout
from motion_data.sequence import ForecastWindow, MotionSequence, WindowSpec
from motion_data.smf_format import load_sequence, save_sequences
from motion_data.transforms import fill_invalid_frames, select_best_person
from motion_data.windows import make_windows
from noise_lab.corruption import NoiseSpec, StructuredNoiseSpec, add_gaussian_noise, add_structured_noise
from utils.error_handler import AlignmentError, SequenceFormatError
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

PROVENANCE_GAUSSIAN = "gaussian"
PROVENANCE_ESTIMATOR = "estimator-import"
PROVENANCE_STRUCTURED = "structured-synthetic"
PROVENANCE_NONE = "noise-free"

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1
INVALID_SCORE_THRESHOLD = 0.1

NoiseSource = Union[None, NoiseSpec, StructuredNoiseSpec, Sequence[MotionSequence]]


@dataclass(frozen=True, eq=False)
class PairedCorpus:
    """Frame-aligned noisy and clean sequences."""

    noisy: Tuple[MotionSequence, ...]
    clean: Tuple[MotionSequence, ...]
    provenance: str
    noise: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'noisy', tuple(self.noisy))
        object.__setattr__(self, 'clean', tuple(self.clean))
        check_alignment(self.noisy, self.clean)

    def __len__(self) -> int:
        return len(self.noisy)


def check_alignment(noisy: Sequence[MotionSequence], clean: Sequence[MotionSequence]):
    if len(noisy) != len(clean):
        raise AlignmentError(f"{len(noisy)} noisy sequences for {len(clean)} clean ones")
    for n, c in zip(noisy, clean):
        if n.data.shape != c.data.shape:
            raise AlignmentError(f"Noisy '{n.name}' {n.data.shape} does not align with clean '{c.name}' {c.data.shape}")
        if n.layout.names != c.layout.names or n.fps != c.fps:
            raise AlignmentError(f"Noisy '{n.name}' and clean '{c.name}' differ in layout or fps")


def _match_imports(clean: Sequence[MotionSequence], imported: Sequence[MotionSequence]) -> List[MotionSequence]:
    by_name = {seq.name: seq for seq in imported}
    if len(by_name) == len(imported) and all(c.name in by_name for c in clean):
        return [by_name[c.name] for c in clean]
    if len(imported) != len(clean):
        raise AlignmentError(f"Cannot pair {len(imported)} imported sequences with {len(clean)} clean ones")
    return list(imported)


def _prepare_import(seq: MotionSequence, partner: MotionSequence) -> MotionSequence:
    if seq.persons > partner.persons and seq.validity is not None:
        seq = select_best_person(seq)
    if seq.validity is not None:
        seq = fill_invalid_frames(seq, INVALID_SCORE_THRESHOLD)
    return seq.replace(name=partner.name)


def build_noisy_benchmark(clean: Sequence[MotionSequence], source: NoiseSource) -> PairedCorpus:
    """
    Pair clean sequences with a noisy counterpart.

    ``source`` is a NoiseSpec (clipped Gaussian noise), a StructuredNoiseSpec
    (emulated estimator error), a list of imported estimator outputs, or None
    for a noise-free pairing. Imported and structured sequences go through the
    invalid-frame repair at score threshold 0.1.
    """
    clean = list(clean)
    if source is None:
        return PairedCorpus(clean, clean, PROVENANCE_NONE)
    if isinstance(source, NoiseSpec):
        noisy = [add_gaussian_noise(seq, source, stream=i) for i, seq in enumerate(clean)]
        return PairedCorpus(noisy, clean, PROVENANCE_GAUSSIAN, source.to_dict())
    if isinstance(source, StructuredNoiseSpec):
        noisy = [fill_invalid_frames(add_structured_noise(seq, source, stream=i), INVALID_SCORE_THRESHOLD)
                 for i, seq in enumerate(clean)]
        return PairedCorpus(noisy, clean, PROVENANCE_STRUCTURED, source.to_dict())

    imported = _match_imports(clean, list(source))
    noisy = [_prepare_import(seq, partner) for seq, partner in zip(imported, clean)]
    corpus = PairedCorpus(noisy, clean, PROVENANCE_ESTIMATOR)
    logger.info(f"Imported estimator corpus: {len(corpus)} pairs, time-zero error "
                f"{time_zero_error(corpus):.1f} mm")
    return corpus


def time_zero_error(corpus: PairedCorpus) -> float:
    """Mean per-joint distance between noisy and clean coordinates over all frames."""
    total = 0.0
    count = 0
    for n, c in zip(corpus.noisy, corpus.clean):
        distances = np.linalg.norm(n.data.astype(np.float64) - c.data.astype(np.float64), axis=-1)
        total += float(distances.sum())
        count += distances.size
    return total / count if count else 0.0


def paired_windows(corpus: PairedCorpus, spec: WindowSpec,
                   merge: bool = False) -> Tuple[List[ForecastWindow], List[ForecastWindow]]:
    """Window noisy and clean sequences identically; the i-th windows align."""
    noisy, clean = [], []
    for n, c in zip(corpus.noisy, corpus.clean):
        noisy.extend(make_windows(n, spec, merge))
        clean.extend(make_windows(c, spec, merge))
    return noisy, clean


def noisy_windows(corpus: PairedCorpus, spec: WindowSpec, merge: bool = False) -> List[ForecastWindow]:
    """Windows of the noisy half only."""
    windows = []
    for n in corpus.noisy:
        windows.extend(make_windows(n, spec, merge))
    return windows


def save_paired(corpus: PairedCorpus, path: str) -> str:
    """Write both halves and the manifest; returns the manifest path."""
    FileManager.ensure_directory(path)
    noisy_files = save_sequences(corpus.noisy, os.path.join(path, "noisy"))
    clean_files = save_sequences(corpus.clean, os.path.join(path, "clean"))
    manifest = {
        'manifest_version': MANIFEST_VERSION,
        'provenance': corpus.provenance,
        'noise': corpus.noise,
        'pairs': [
            {'noisy': os.path.relpath(n, path), 'clean': os.path.relpath(c, path)}
            for n, c in zip(noisy_files, clean_files)
        ],
    }
    manifest_path = os.path.join(path, MANIFEST_NAME)
    FileManager.write_json(manifest_path, manifest)
    logger.info(f"Saved paired corpus ({len(corpus)} pairs, {corpus.provenance}) to {path}")
    return manifest_path


def load_paired(path: str, layout: Optional[JointLayout] = None) -> PairedCorpus:
    manifest_path = os.path.join(path, MANIFEST_NAME)
    try:
        with open(manifest_path, 'r', encoding='utf-8') as f:
            manifest = json.load(f)
        pairs = manifest['pairs']
        provenance = manifest['provenance']
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise SequenceFormatError(f"Invalid paired-corpus manifest: {e}", path=manifest_path)

    noisy = [load_sequence(os.path.join(path, pair['noisy']), layout) for pair in pairs]
    clean = [load_sequence(os.path.join(path, pair['clean']), layout) for pair in pairs]
    return PairedCorpus(noisy, clean, provenance, manifest.get('noise', {}))
