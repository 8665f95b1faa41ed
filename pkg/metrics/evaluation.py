"""
Dataset-level evaluation of a forecaster on a list of windows.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from forecasters.base_forecaster import BaseForecaster
from metrics.horizons import HorizonSet
from metrics.pose_metrics import mpjpe, vim
from metrics.report import MetricReport
from metrics.throughput import measure_fps
from motion_data.sequence import ForecastWindow
from motion_data.windows import center_window, uncenter_frames
from utils.error_handler import ConfigurationError, DataError, ShapeMismatchError

logger = logging.getLogger(__name__)


def _check_windows(windows: Sequence[ForecastWindow]):
    if not windows:
        raise DataError("No windows to evaluate")
    first = windows[0]
    for w in windows[1:]:
        if w.input.shape != first.input.shape or w.target.shape != first.target.shape or w.fps != first.fps:
            raise ShapeMismatchError(
                f"Window '{w.source}' at {w.start} differs in shape or fps from '{first.source}'")


def global_target(w: ForecastWindow) -> np.ndarray:
    """Target frames in the window's original (uncentered) coordinates."""
    return uncenter_frames(w.target, w)


def predict_windows(model: BaseForecaster, windows: Sequence[ForecastWindow],
                    batch_size: int = 256) -> List[np.ndarray]:
    """
    Forecast every window and return predictions in global coordinates.

    Each window is centered (unless it already is), the model predicts in the
    centered frame, and the prediction is shifted back by the window's offset.
    """
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    centered = [w if w.centered else center_window(w) for w in windows]
    predictions = []
    for begin in range(0, len(centered), batch_size):
        chunk = centered[begin:begin + batch_size]
        outputs = model.predict_batch(np.stack([w.input for w in chunk]))
        for w, out in zip(chunk, outputs):
            predictions.append(uncenter_frames(out, w))
    return predictions


def per_sample_errors(windows: Sequence[ForecastWindow], predictions: Sequence[np.ndarray],
                      indices: Sequence[int],
                      targets: Optional[Sequence[ForecastWindow]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    MPJPE and VIM of every sample at every horizon index: two [N][H] arrays.

    ``targets`` (default ``windows``) supplies the ground truth; dual
    evaluation passes clean windows here while ``windows`` are the noisy ones.
    """
    targets = windows if targets is None else targets
    if len(targets) != len(predictions) or len(windows) != len(predictions):
        raise ShapeMismatchError(f"{len(predictions)} predictions for {len(targets)} targets")
    errors = np.empty((len(predictions), len(indices)))
    vims = np.empty_like(errors)
    for n, (w, pred) in enumerate(zip(targets, predictions)):
        gt = w.as_person_tensor(global_target(w))
        pred = w.as_person_tensor(np.asarray(pred))
        for h, index in enumerate(indices):
            errors[n, h] = mpjpe(gt, pred, index)
            vims[n, h] = vim(gt, pred, index)
    return errors, vims


def build_report(model: BaseForecaster, errors: np.ndarray, vims: np.ndarray, horizons: HorizonSet,
                 fps: Optional[float], **kwargs) -> MetricReport:
    """Average per-sample errors into a report; FADE/FCE follow from ``fps``."""
    return MetricReport.build(
        model_name=model.name,
        param_count=model.param_count,
        horizons_ms=horizons.horizons_ms,
        mpjpe_mm=errors.mean(axis=0).tolist(),
        vim_values=vims.mean(axis=0).tolist(),
        fps=fps,
        sample_count=errors.shape[0],
        **kwargs,
    )


def check_horizons(windows: Sequence[ForecastWindow], horizons: HorizonSet) -> List[int]:
    if horizons.fps != windows[0].fps:
        raise ConfigurationError(
            f"Horizons are defined at {horizons.fps} Hz but windows run at {windows[0].fps} Hz")
    return horizons.indices(windows[0].t_out)


def timed_fps(model: BaseForecaster, sample: ForecastWindow, measure_speed: bool,
              warmup: int, iters: int) -> Optional[float]:
    if not (measure_speed and model.measures_speed):
        return None
    return measure_fps(model, sample, warmup=warmup, iters=iters)


def evaluate(model: BaseForecaster, windows: Sequence[ForecastWindow], horizons: HorizonSet,
             measure_speed: bool = True, warmup: int = 10, iters: int = 100,
             batch_size: int = 256, dataset: str = "", label: str = "") -> MetricReport:
    """
    Evaluate ``model`` on ``windows`` at every horizon.

    MPJPE and VIM are averaged over samples (action-agnostic). FPS is measured
    once at batch size 1 on the first window unless ``measure_speed`` is off or
    the forecaster has no meaningful runtime.
    """
    _check_windows(windows)
    indices = check_horizons(windows, horizons)

    predictions = predict_windows(model, windows, batch_size)
    errors, vims = per_sample_errors(windows, predictions, indices)
    fps = timed_fps(model, windows[0], measure_speed, warmup, iters)

    report = build_report(model, errors, vims, horizons, fps, dataset=dataset, label=label)
    logger.info(f"{model.name} on {len(windows)} windows: MPJPE "
                + ", ".join(f"{h:g}ms={m:.1f}" for h, m in zip(report.horizons_ms, report.mpjpe_mm)))
    return report
