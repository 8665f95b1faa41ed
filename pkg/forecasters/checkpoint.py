"""
Checkpoint container for trained forecasters.

One file: the magic bytes ``MBCK``, a little-endian uint32 format version, a
uint32 header length, a UTF-8 JSON header, then the named tensors back to back.
The header records the kind of model, its configuration, and per tensor its
name, shape, dtype (``<f4`` or ``<f8``) and byte offset. Training state
(last completed epoch, loss history) rides along in the header.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from forecasters.base_forecaster import BaseForecaster
from forecasters.motion_conformer import ConformerForecaster, ModelConfig, MotionConformer, build_model
from forecasters.ridge_forecaster import RidgeForecaster, RidgeModel
from utils.error_handler import ConfigurationError, DataError, SequenceFormatError, ShapeMismatchError
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

MAGIC = b"MBCK"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sII")
TENSOR_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}

KIND_CONFORMER = "motion_conformer"
KIND_RIDGE = "ridge"


@dataclass
class Checkpoint:
    """A loaded checkpoint: the rebuilt forecaster plus its training state."""

    kind: str
    forecaster: BaseForecaster
    epoch: int = 0
    history: List[Dict[str, Any]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def model(self) -> Union[MotionConformer, RidgeModel]:
        return self.forecaster.model


def _tensors_of(model: Union[MotionConformer, RidgeModel]) -> Tuple[str, Dict[str, Any], Dict[str, np.ndarray]]:
    if isinstance(model, MotionConformer):
        tensors = {name: t.detach().cpu().numpy() for name, t in model.state_dict().items()}
        return KIND_CONFORMER, model.cfg.to_dict(), tensors
    if isinstance(model, RidgeModel):
        config = {'lam': model.lam, 't_in': model.t_in, 't_out': model.t_out, 'joints': model.joints}
        return KIND_RIDGE, config, {'weights': model.weights}
    raise ConfigurationError(f"Cannot checkpoint a {type(model).__name__}")


def save_checkpoint(model: Union[BaseForecaster, MotionConformer, RidgeModel], path: str,
                    epoch: int = 0, history: Optional[List[Dict[str, Any]]] = None,
                    meta: Optional[Dict[str, Any]] = None):
    """Write ``model`` (a forecaster or its underlying network/ridge model) to ``path``."""
    if isinstance(model, (ConformerForecaster, RidgeForecaster)):
        model = model.model
    kind, config, tensors = _tensors_of(model)

    entries = []
    blobs = []
    offset = 0
    for name, array in tensors.items():
        dtype = "<f8" if array.dtype == np.float64 else "<f4"
        raw = np.ascontiguousarray(array, dtype=TENSOR_DTYPES[dtype]).tobytes()
        entries.append({'name': name, 'shape': list(array.shape), 'dtype': dtype,
                        'offset': offset, 'nbytes': len(raw)})
        blobs.append(raw)
        offset += len(raw)

    header = {
        'format_version': FORMAT_VERSION,
        'kind': kind,
        'config': config,
        'tensors': entries,
        'epoch': int(epoch),
        'history': history or [],
        'meta': meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    payload = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + b"".join(blobs)
    try:
        FileManager.write_bytes_atomic(path, payload)
    except OSError as e:
        raise DataError(f"Cannot write checkpoint: {e}", path=path)
    logger.info(f"Saved {kind} checkpoint (epoch {epoch}) to {path}")


def _read(path: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    try:
        with open(path, 'rb') as f:
            raw = f.read()
    except OSError as e:
        raise SequenceFormatError(f"Cannot read checkpoint: {e}", path=path)

    if len(raw) < _PREFIX.size:
        raise SequenceFormatError("Checkpoint is truncated", path=path)
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise SequenceFormatError("Not a checkpoint file", path=path)
    if version != FORMAT_VERSION:
        raise SequenceFormatError(f"Unsupported checkpoint version {version} (expected {FORMAT_VERSION})",
                                  path=path)
    body_start = _PREFIX.size + header_len
    try:
        header = json.loads(raw[_PREFIX.size:body_start].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SequenceFormatError(f"Corrupt checkpoint header: {e}", path=path)

    tensors = {}
    body = raw[body_start:]
    for entry in header.get('tensors', []):
        dtype = TENSOR_DTYPES.get(entry['dtype'])
        end = entry['offset'] + entry['nbytes']
        if dtype is None or end > len(body):
            raise SequenceFormatError(f"Tensor '{entry['name']}' is corrupt or truncated", path=path)
        array = np.frombuffer(body[entry['offset']:end], dtype=dtype)
        try:
            tensors[entry['name']] = array.reshape(entry['shape']).astype(dtype.newbyteorder('='))
        except ValueError as e:
            raise SequenceFormatError(f"Tensor '{entry['name']}': {e}", path=path)
    return header, tensors


def _conformer_from(header: Dict[str, Any], tensors: Dict[str, np.ndarray], path: str) -> ConformerForecaster:
    cfg = ModelConfig.from_dict(header['config'])
    model = build_model(cfg, seed=0)
    state = model.state_dict()
    if set(state) != set(tensors):
        raise ShapeMismatchError("Checkpoint tensors do not match the architecture", path=path)
    dtypes = {t.dtype for t in tensors.values()}
    if dtypes == {np.dtype(np.float64)}:
        model = model.double()
    for name, value in state.items():
        if tuple(value.shape) != tensors[name].shape:
            raise ShapeMismatchError(
                f"Tensor '{name}' has shape {tensors[name].shape}, architecture needs {tuple(value.shape)}",
                path=path)
    model.load_state_dict({name: torch.from_numpy(array.copy()) for name, array in tensors.items()})
    model.eval()
    return ConformerForecaster(model)


def load_checkpoint(path: str, joints: Optional[int] = None) -> Checkpoint:
    """
    Rebuild the forecaster stored at ``path`` without any external configuration.

    When ``joints`` is given, a checkpoint trained for another joint count is
    rejected with ShapeMismatchError.
    """
    header, tensors = _read(path)
    kind = header.get('kind')
    config = header.get('config', {})

    if joints is not None and config.get('joints') != joints:
        raise ShapeMismatchError(
            f"Checkpoint is for {config.get('joints')} joints, data has {joints}", path=path)

    if kind == KIND_CONFORMER:
        forecaster = _conformer_from(header, tensors, path)
    elif kind == KIND_RIDGE:
        if 'weights' not in tensors:
            raise SequenceFormatError("Ridge checkpoint lacks weights", path=path)
        forecaster = RidgeForecaster(RidgeModel(weights=tensors['weights'], **config))
    else:
        raise SequenceFormatError(f"Unknown checkpoint kind '{kind}'", path=path)

    logger.info(f"Loaded {kind} checkpoint from {path} (epoch {header.get('epoch', 0)})")
    return Checkpoint(kind=kind, forecaster=forecaster, epoch=int(header.get('epoch', 0)),
                      history=list(header.get('history', [])), meta=dict(header.get('meta', {})))
