"""
Closed-form ridge regression from flattened centered inputs to flattened targets.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from forecasters.base_forecaster import BaseForecaster
from motion_data.sequence import ForecastWindow
from utils.error_handler import ConfigurationError, DataError, NumericalError, ShapeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 100.0


@dataclass(frozen=True, eq=False)
class RidgeModel:
    """
    Affine map y = [x, 1] W.

    ``weights`` is [d_in + 1][d_out] with the bias as last row, where
    d_in = t_in*J*3 and d_out = t_out*J*3.
    """

    weights: np.ndarray
    lam: float
    t_in: int
    t_out: int
    joints: int

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        expected = (self.d_in + 1, self.d_out)
        if weights.shape != expected:
            raise ShapeMismatchError(f"Ridge weights {weights.shape}, expected {expected}")
        if not np.all(np.isfinite(weights)):
            raise NumericalError("Ridge weights are not finite")
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

    @property
    def d_in(self) -> int:
        return self.t_in * self.joints * 3

    @property
    def d_out(self) -> int:
        return self.t_out * self.joints * 3

    @property
    def bias(self) -> np.ndarray:
        return self.weights[-1]


def _design(inputs: np.ndarray) -> np.ndarray:
    flat = inputs.reshape(inputs.shape[0], -1).astype(np.float64)
    return np.hstack([flat, np.ones((flat.shape[0], 1))])


def ridge_fit(train: Sequence[ForecastWindow], lam: float = DEFAULT_LAMBDA) -> RidgeModel:
    """
    Solve W = (X^T X + lam*P)^-1 X^T Y on centered windows.

    P is the identity with a zero for the bias feature, so the bias is never
    penalized. Raises NumericalError when the system is singular (lam = 0 with
    rank-deficient inputs).
    """
    if lam < 0:
        raise ConfigurationError(f"Ridge lambda must be >= 0, got {lam}")
    if not train:
        raise DataError("ridge_fit needs at least one window")
    first = train[0]
    for w in train:
        if not w.centered:
            raise DataError(f"ridge_fit expects centered windows; '{w.source}' at {w.start} is not")
        if w.input.shape != first.input.shape or w.target.shape != first.target.shape:
            raise ShapeMismatchError("All ridge training windows must share one shape")

    x = _design(np.stack([w.input for w in train]))
    y = np.stack([w.target for w in train]).reshape(len(train), -1).astype(np.float64)

    penalty = np.full(x.shape[1], float(lam))
    penalty[-1] = 0.0
    gram = x.T @ x + np.diag(penalty)
    if lam == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise NumericalError(f"Ridge system is singular at lambda=0 ({len(train)} samples, {x.shape[1]} features)")
    try:
        weights = np.linalg.solve(gram, x.T @ y)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Ridge solve failed: {e}") from e

    logger.info(f"Fitted ridge (lambda={lam:g}) on {len(train)} windows, {weights.size} weights")
    return RidgeModel(weights=weights, lam=float(lam), t_in=first.t_in, t_out=first.t_out,
                      joints=first.joints)


def _predict(model: RidgeModel, inputs: np.ndarray) -> np.ndarray:
    if inputs.shape[1:] != (model.t_in, model.joints, 3):
        raise ShapeMismatchError(
            f"Ridge model expects [B][{model.t_in}][{model.joints}][3], got {inputs.shape}")
    out = _design(inputs) @ model.weights
    return out.reshape(inputs.shape[0], model.t_out, model.joints, 3)


def ridge_predict(model: RidgeModel, w: ForecastWindow) -> np.ndarray:
    """[t_out][J][3] prediction for one centered window."""
    if not w.centered:
        raise DataError(f"ridge_predict expects a centered window; '{w.source}' at {w.start} is not")
    return _predict(model, w.input[None])[0]


class RidgeForecaster(BaseForecaster):
    name = "ridge"

    def __init__(self, model: RidgeModel):
        super().__init__(model.t_out)
        self.model = model

    @property
    def param_count(self) -> int:
        return int(self.model.weights.size)

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        out = _predict(self.model, self.check_inputs(inputs))
        return self.check_outputs(out.astype(np.asarray(inputs).dtype, copy=False))
