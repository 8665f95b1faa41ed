"""
Dual evaluation on paired corpora.

"measurable" compares forecasts from noisy inputs with noisy future frames, the
error a live system can observe. "real" compares the same forecasts with the
clean future frames.
"""

import logging
from typing import Optional, Tuple

from forecasters.base_forecaster import BaseForecaster
from metrics.evaluation import (build_report, check_horizons, per_sample_errors, predict_windows,
                                timed_fps)
from metrics.horizons import HorizonSet
from metrics.report import MetricReport
from motion_data.sequence import WindowSpec
from noise_lab.paired_corpus import PairedCorpus, paired_windows, time_zero_error
from utils.error_handler import AlignmentError

logger = logging.getLogger(__name__)

LABEL_MEASURABLE = "measurable"
LABEL_REAL = "real"


def evaluate_dual(model: BaseForecaster, corpus: PairedCorpus, horizons: HorizonSet,
                  window_spec: Optional[WindowSpec] = None, measure_speed: bool = True,
                  warmup: int = 10, iters: int = 100, batch_size: int = 256,
                  dataset: str = "") -> Tuple[MetricReport, MetricReport]:
    """
    Evaluate ``model`` on the noisy half and score it against both halves.

    Both reports share one set of predictions and one FPS measurement.
    ``window_spec`` defaults to twice the model's output length, stride 1.
    """
    spec = window_spec or WindowSpec.for_output(model.t_out)
    noisy, clean = paired_windows(corpus, spec)
    if not noisy:
        raise AlignmentError(f"Paired corpus yields no windows for {spec}")
    indices = check_horizons(noisy, horizons)

    predictions = predict_windows(model, noisy, batch_size)
    measurable_err, measurable_vim = per_sample_errors(noisy, predictions, indices)
    real_err, real_vim = per_sample_errors(noisy, predictions, indices, targets=clean)
    fps = timed_fps(model, noisy[0], measure_speed, warmup, iters)

    t0 = time_zero_error(corpus)
    measurable = build_report(model, measurable_err, measurable_vim, horizons, fps, dataset=dataset,
                              label=LABEL_MEASURABLE, time_zero_error_mm=t0)
    real = build_report(model, real_err, real_vim, horizons, fps, dataset=dataset,
                        label=LABEL_REAL, time_zero_error_mm=t0)
    logger.info(f"{model.name} dual @{horizons.horizons_ms[-1]:g}ms: measurable "
                f"{measurable.mpjpe_mm[-1]:.1f} mm, real {real.mpjpe_mm[-1]:.1f} mm")
    return measurable, real
