"""
Base forecaster class with common functionality.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

from motion_data.sequence import ForecastWindow
from utils.error_handler import NumericalError, ShapeMismatchError

logger = logging.getLogger(__name__)


class BaseForecaster(ABC):
    """Abstract base class for all forecasters.

    Forecasters map centered input frames to centered output frames. Every
    implementation is immutable after construction (or after fitting), so one
    instance may serve concurrent callers.
    """

    name = "forecaster"
    # static methods have no meaningful runtime; reports show "-" for their speed
    measures_speed = True

    def __init__(self, t_out: int):
        self.t_out = t_out

    @abstractmethod
    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        """
        Forecast a batch of windows.

        Args:
            inputs: Array [B][t_in][J][3] in millimeters

        Returns:
            Array [B][t_out][J][3] in millimeters
        """

    @property
    def param_count(self) -> int:
        return 0

    def predict(self, window: ForecastWindow) -> np.ndarray:
        """Forecast one window; returns [t_out][J][3] in the window's frame."""
        return self.predict_batch(window.input[None])[0]

    def check_inputs(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs)
        if inputs.ndim != 4 or inputs.shape[-1] != 3:
            raise ShapeMismatchError(f"{self.name} expects [B][t_in][J][3] inputs, got {inputs.shape}")
        return inputs

    def check_outputs(self, outputs: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(outputs)):
            logger.error(f"{self.name} produced non-finite output")
            raise NumericalError(f"{self.name} produced non-finite output")
        return outputs
