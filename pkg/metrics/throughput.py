"""
Throughput and latency of forecasters at batch size 1.

Timing uses the wall clock. Measurements need exclusive use of the model and of
the calling thread; do not run two measurements concurrently in one process.
"""

import logging
import time
from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from forecasters.base_forecaster import BaseForecaster
from motion_data.sequence import ForecastWindow
from motion_data.windows import center_window
from utils.error_handler import BenchError, ConfigurationError, NumericalError

logger = logging.getLogger(__name__)

MIN_ITERS = 10


@dataclass(frozen=True)
class LatencyStats:
    """Per-call latency summary and the throughput derived from it."""

    fps: float
    mean_ms: float
    p50_ms: float
    p95_ms: float
    repeat_cv: float
    iters: int
    repeats: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _timed_calls(model: BaseForecaster, inputs: np.ndarray, warmup: int, iters: int) -> np.ndarray:
    try:
        for _ in range(warmup):
            model.predict_batch(inputs)
        latencies = np.empty(iters)
        for i in range(iters):
            start = time.perf_counter()
            model.predict_batch(inputs)
            latencies[i] = time.perf_counter() - start
    except BenchError:
        raise
    except Exception as e:
        raise NumericalError(f"{model.name} failed during inference: {e}") from e
    return latencies


def _prepare(sample: ForecastWindow, iters: int) -> np.ndarray:
    if iters < MIN_ITERS:
        raise ConfigurationError(f"At least {MIN_ITERS} timed iterations are required, got {iters}")
    if not sample.centered:
        sample = center_window(sample)
    return sample.input[None]


def measure_fps(model: BaseForecaster, sample: ForecastWindow, warmup: int = 10,
                iters: int = 100) -> float:
    """
    Forecasts per second at batch size 1.

    Runs ``warmup`` untimed calls, then ``iters`` timed calls, and returns
    ``iters`` divided by their total wall time.
    """
    inputs = _prepare(sample, iters)
    latencies = _timed_calls(model, inputs, warmup, iters)
    fps = iters / float(latencies.sum())
    logger.info(f"{model.name}: {fps:.1f} forecasts/s over {iters} calls")
    return fps


def measure_latency(model: BaseForecaster, sample: ForecastWindow, warmup: int = 10,
                    iters: int = 100, repeats: int = 5) -> LatencyStats:
    """Repeat the FPS measurement and summarize latencies (p50/p95) and repeat spread."""
    inputs = _prepare(sample, iters)
    if repeats < 1:
        raise ConfigurationError(f"repeats must be >= 1, got {repeats}")

    all_latencies = []
    repeat_fps = []
    for r in range(repeats):
        latencies = _timed_calls(model, inputs, warmup if r == 0 else 0, iters)
        all_latencies.append(latencies)
        repeat_fps.append(iters / float(latencies.sum()))

    latencies_ms = np.concatenate(all_latencies) * 1000.0
    repeat_fps = np.asarray(repeat_fps)
    cv = float(repeat_fps.std() / repeat_fps.mean()) if repeats > 1 else 0.0
    return LatencyStats(
        fps=float(latencies_ms.size / (latencies_ms.sum() / 1000.0)),
        mean_ms=float(latencies_ms.mean()),
        p50_ms=float(np.percentile(latencies_ms, 50)),
        p95_ms=float(np.percentile(latencies_ms, 95)),
        repeat_cv=cv,
        iters=iters,
        repeats=repeats,
    )
