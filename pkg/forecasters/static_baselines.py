"""
Static forecasters: repeat the last frame, or extrapolate the mean last delta.
"""

import numpy as np

from forecasters.base_forecaster import BaseForecaster
from motion_data.sequence import ForecastWindow
from utils.error_handler import ShapeMismatchError


def _repeat_last(inputs: np.ndarray, t_out: int) -> np.ndarray:
    last = inputs[:, -1:]
    return np.repeat(last, t_out, axis=1)


def _last_delta(inputs: np.ndarray, t_out: int) -> np.ndarray:
    if inputs.shape[1] < 2:
        raise ShapeMismatchError(f"last_delta_average needs at least 2 input frames, got {inputs.shape[1]}")
    last = inputs[:, -1]
    # one shared 3-vector per sample keeps the skeleton rigid
    delta = (last - inputs[:, -2]).mean(axis=1, keepdims=True)
    steps = np.arange(1, t_out + 1, dtype=inputs.dtype)[None, :, None, None]
    return last[:, None] + steps * delta[:, None]


def repeat_last_frame(w: ForecastWindow) -> np.ndarray:
    """Every output frame equals the last input frame: [t_out][J][3]."""
    return _repeat_last(w.input[None], w.t_out)[0]


def last_delta_average(w: ForecastWindow) -> np.ndarray:
    """
    Constant-velocity extrapolation of the whole body.

    d is the mean over joints of (last input frame - previous input frame);
    output step k (1-based) is the last input frame shifted by k*d.
    """
    return _last_delta(w.input[None], w.t_out)[0]


class RepeatLastFrameForecaster(BaseForecaster):
    name = "repeat_last"
    measures_speed = False

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        return _repeat_last(self.check_inputs(inputs), self.t_out)


class LastDeltaForecaster(BaseForecaster):
    name = "last_delta"
    measures_speed = False

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        return _last_delta(self.check_inputs(inputs), self.t_out)
