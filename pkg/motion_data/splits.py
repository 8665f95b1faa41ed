"""
Deterministic train/val/test split of a corpus.
"""

import hashlib
import logging
from typing import List, Sequence, Tuple

from motion_data.sequence import MotionSequence
from utils.error_handler import ConfigurationError

logger = logging.getLogger(__name__)


def _unit_hash(seed: int, name: str) -> float:
    digest = hashlib.sha256(f"{seed}:{name}".encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'big') / 2.0 ** 64


def split_corpus(seqs: Sequence[MotionSequence], seed: int,
                 ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
                 ) -> Tuple[List[MotionSequence], List[MotionSequence], List[MotionSequence]]:
    """
    Assign each sequence to train, val or test by a hash of (seed, name).

    The assignment of one sequence never depends on the rest of the corpus.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigurationError(f"Split ratios must be three nonnegative numbers summing to 1, got {ratios}")

    train_cut = ratios[0]
    val_cut = ratios[0] + ratios[1]
    train, val, test = [], [], []
    for seq in seqs:
        u = _unit_hash(seed, seq.name)
        if u < train_cut:
            train.append(seq)
        elif u < val_cut:
            val.append(seq)
        else:
            test.append(seq)

    logger.info(f"Split {len(seqs)} sequences into {len(train)}/{len(val)}/{len(test)}")
    return train, val, test
