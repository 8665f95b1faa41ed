"""
The realistic-noise study: how much of the noise-induced degradation can be recovered.

Stages, each evaluated on the same noisy test corpus (measurable and real):

  zero_shot           trained on clean data only
  gaussian_pretrained the zero-shot model, trained further with clipped Gaussian input noise
  finetuned           the gaussian model, finetuned without labels on the noisy training corpus
  scratch_on_noisy    a fresh model trained only on the noisy training corpus
"""

import copy
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from forecasters.motion_conformer import ModelConfig, build_model
from metrics.horizons import HorizonSet
from metrics.report import MetricReport
from motion_data.sequence import MotionSequence, WindowSpec
from motion_data.windows import make_windows
from noise_lab.corruption import NoiseSpec, StructuredNoiseSpec
from noise_lab.dual_eval import evaluate_dual
from noise_lab.finetune import DEFAULT_LR_FRACTION, finetune_config, finetune_unsupervised
from noise_lab.paired_corpus import build_noisy_benchmark, noisy_windows, time_zero_error
from training.config import InputNoiseSpec, TrainConfig
from training.trainer import train
from utils.error_handler import DataError

logger = logging.getLogger(__name__)

STAGES = ("zero_shot", "gaussian_pretrained", "finetuned", "scratch_on_noisy")


@dataclass
class NoiseStudyResult:
    reports: Dict[str, Tuple[MetricReport, MetricReport]] = field(default_factory=dict)
    time_zero_error_mm: float = 0.0

    def measurable_at(self, stage: str, horizon_index: int = -1) -> float:
        return self.reports[stage][0].mpjpe_mm[horizon_index]

    def real_at(self, stage: str, horizon_index: int = -1) -> float:
        return self.reports[stage][1].mpjpe_mm[horizon_index]

    def ordering_holds(self) -> bool:
        """zero-shot > gaussian-pretrained > finetuned on measurable error at the longest horizon."""
        return (self.measurable_at("zero_shot") > self.measurable_at("gaussian_pretrained")
                > self.measurable_at("finetuned"))

    def all_reports(self) -> List[MetricReport]:
        reports = []
        for stage, (measurable, real) in self.reports.items():
            reports.append(replace(measurable, label=f"{stage} {measurable.label}"))
            reports.append(replace(real, label=f"{stage} {real.label}"))
        return reports

    def to_dict(self) -> Dict[str, Any]:
        return {
            'time_zero_error_mm': self.time_zero_error_mm,
            'ordering_holds': self.ordering_holds() if "finetuned" in self.reports else None,
            'stages': {stage: {'measurable': m.to_dict(), 'real': r.to_dict()}
                       for stage, (m, r) in self.reports.items()},
        }


def _reseeded(source, offset: int):
    if isinstance(source, (NoiseSpec, StructuredNoiseSpec)):
        return replace(source, seed=source.seed + offset)
    return source


def _clean_windows(seqs: Sequence[MotionSequence], spec: WindowSpec):
    windows = []
    for seq in seqs:
        windows.extend(make_windows(seq, spec))
    return windows


def run_noise_study(train_seqs: Sequence[MotionSequence], val_seqs: Sequence[MotionSequence],
                    test_seqs: Sequence[MotionSequence], model_cfg: ModelConfig, train_cfg: TrainConfig,
                    noise_source, window_spec: WindowSpec, horizons: HorizonSet,
                    gaussian: Optional[InputNoiseSpec] = None, lr_fraction: float = DEFAULT_LR_FRACTION,
                    include_scratch: bool = True) -> NoiseStudyResult:
    """
    Run every stage from one configuration and return dual reports per stage.

    ``noise_source`` builds the noisy corpora (see build_noisy_benchmark);
    train, validation and test corpora use distinct noise seeds.
    """
    if not (train_seqs and val_seqs and test_seqs):
        raise DataError("The noise study needs non-empty train, validation and test sequences")
    gaussian = gaussian or InputNoiseSpec(enabled=True)
    if not gaussian.enabled:
        gaussian = replace(gaussian, enabled=True)

    paired_train = build_noisy_benchmark(train_seqs, _reseeded(noise_source, 0))
    paired_val = build_noisy_benchmark(val_seqs, _reseeded(noise_source, 1))
    paired_test = build_noisy_benchmark(test_seqs, _reseeded(noise_source, 2))
    result = NoiseStudyResult()
    result.time_zero_error_mm = time_zero_error(paired_test)

    def dual(forecaster, stage: str):
        reports = evaluate_dual(forecaster, paired_test, horizons, window_spec, measure_speed=False,
                                dataset=f"noisy-{paired_test.provenance}")
        result.reports[stage] = reports
        logger.info(f"Noise study stage '{stage}': measurable {reports[0].mpjpe_mm[-1]:.1f} mm, "
                    f"real {reports[1].mpjpe_mm[-1]:.1f} mm")

    clean_train = _clean_windows(train_seqs, window_spec)
    clean_val = _clean_windows(val_seqs, window_spec)

    zero_shot = train(build_model(model_cfg, seed=train_cfg.seed), clean_train, clean_val, train_cfg)
    dual(zero_shot.forecaster, "zero_shot")

    noisy_cfg = train_cfg.replace(input_noise=gaussian)
    gaussian_model = train(copy.deepcopy(zero_shot.forecaster.model), clean_train, clean_val, noisy_cfg)
    dual(gaussian_model.forecaster, "gaussian_pretrained")

    finetuned = finetune_unsupervised(gaussian_model.forecaster, paired_train,
                                      finetune_config(train_cfg, lr_fraction), window_spec)
    dual(finetuned.forecaster, "finetuned")

    if include_scratch:
        scratch = train(build_model(model_cfg, seed=train_cfg.seed),
                        noisy_windows(paired_train, window_spec), noisy_windows(paired_val, window_spec),
                        train_cfg)
        dual(scratch.forecaster, "scratch_on_noisy")

    return result

