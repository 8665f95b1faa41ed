import math

import numpy as np
import pytest

from conftest import constant_velocity_sequence
from forecasters.motion_conformer import ConformerForecaster, ModelConfig, build_model
from forecasters.static_baselines import RepeatLastFrameForecaster
from metrics.horizons import HorizonSet
from motion_data.sequence import WindowSpec
from motion_data.synthetic import synth_corpus
from noise_lab.corruption import (NoiseSpec, StructuredNoiseSpec, add_gaussian_noise, add_structured_noise,
                                  gaussian_perturbation)
from noise_lab.dual_eval import LABEL_MEASURABLE, LABEL_REAL, evaluate_dual
from noise_lab.finetune import finetune_config, finetune_unsupervised, split_windows
from noise_lab.paired_corpus import (MANIFEST_NAME, PROVENANCE_GAUSSIAN, PROVENANCE_NONE, PairedCorpus,
                                     build_noisy_benchmark, load_paired, noisy_windows, paired_windows,
                                     save_paired, time_zero_error)
from noise_lab.study import STAGES, run_noise_study
from training.config import TrainConfig
from utils.error_handler import AlignmentError, ConfigurationError, DataError, SequenceFormatError


class TestGaussianNoise:
    def test_clip_bounds_every_draw(self):
        draws = gaussian_perturbation(np.random.default_rng(0), (200_000,), 25.0, 40.0)
        assert np.abs(draws).max() <= 40.0

    def test_clip_holds_in_float32(self):
        seq = constant_velocity_sequence(frames=2000)
        seq = seq.replace(data=(seq.data + 12345.678).astype(np.float32))
        noisy = add_gaussian_noise(seq, NoiseSpec(std=25.0, clip=25.0, seed=3))
        assert noisy.data.dtype == np.float32
        delta = noisy.data.astype(np.float64) - seq.data.astype(np.float64)
        assert np.abs(delta).max() <= 25.0
        assert np.isclose(np.abs(delta).max(), 25.0, atol=0.01)

    def test_std_close_to_requested(self):
        seq = constant_velocity_sequence(frames=2000)
        noise = add_gaussian_noise(seq, NoiseSpec(std=25.0, clip=125.0)).data - seq.data
        assert noise.std() == pytest.approx(25.0, rel=0.03)
        assert abs(noise.mean()) < 1.0

    def test_seed_and_stream_select_the_draw(self, cv_sequence):
        a = add_gaussian_noise(cv_sequence, NoiseSpec(seed=1), stream=0)
        b = add_gaussian_noise(cv_sequence, NoiseSpec(seed=1), stream=0)
        c = add_gaussian_noise(cv_sequence, NoiseSpec(seed=1), stream=1)
        np.testing.assert_array_equal(a.data, b.data)
        assert not np.array_equal(a.data, c.data)

    def test_clip_below_std_rejected(self):
        with pytest.raises(ConfigurationError):
            NoiseSpec(std=25.0, clip=20.0)


class TestStructuredNoise:
    def test_carries_scores_in_range(self, cv_sequence):
        noisy = add_structured_noise(cv_sequence, StructuredNoiseSpec(invalid_rate=0.2, seed=2))
        assert noisy.validity.shape == (cv_sequence.frames, 1)
        assert noisy.validity.min() < 0.1
        assert noisy.data.shape == cv_sequence.data.shape

    def test_benchmark_repairs_failed_detections(self, small_corpus):
        corpus = build_noisy_benchmark(small_corpus, StructuredNoiseSpec(invalid_rate=0.2, seed=2))
        assert all(seq.validity.min() >= 0.1 for seq in corpus.noisy)
        assert time_zero_error(corpus) > 0

    def test_correlation_must_be_below_one(self):
        with pytest.raises(ConfigurationError):
            StructuredNoiseSpec(jitter_correlation=1.0)


class TestPairedCorpus:
    def test_gaussian_time_zero_error(self):
        clean = [constant_velocity_sequence(name=f"s{i}", frames=400, seed=i) for i in range(3)]
        corpus = build_noisy_benchmark(clean, NoiseSpec(std=25.0, clip=125.0))
        assert corpus.provenance == PROVENANCE_GAUSSIAN
        # mean norm of an isotropic 3-D Gaussian is 2*sqrt(2/pi)*std
        expected = 25.0 * 2.0 * math.sqrt(2.0 / math.pi)
        assert time_zero_error(corpus) == pytest.approx(expected, rel=0.05)

    def test_noise_free_pairing_has_zero_error(self, small_corpus):
        corpus = build_noisy_benchmark(small_corpus, None)
        assert corpus.provenance == PROVENANCE_NONE
        assert time_zero_error(corpus) == 0.0

    def test_length_mismatch_rejected(self, small_corpus):
        with pytest.raises(AlignmentError):
            PairedCorpus(small_corpus[:2], small_corpus[:3], PROVENANCE_NONE)

    def test_frame_mismatch_rejected(self):
        with pytest.raises(AlignmentError):
            PairedCorpus([constant_velocity_sequence(frames=40)], [constant_velocity_sequence(frames=41)],
                         PROVENANCE_NONE)

    def test_imports_matched_by_name(self, small_corpus):
        imported = [seq.replace(data=seq.data + 1.0) for seq in reversed(small_corpus)]
        corpus = build_noisy_benchmark(small_corpus, imported)
        for n, c in zip(corpus.noisy, corpus.clean):
            assert n.name == c.name
            np.testing.assert_allclose(n.data, c.data + 1.0)

    def test_import_count_mismatch_rejected(self, small_corpus):
        renamed = [seq.replace(name=f"x{i}") for i, seq in enumerate(small_corpus[:2])]
        with pytest.raises(AlignmentError):
            build_noisy_benchmark(small_corpus, renamed)

    def test_windows_align(self, small_corpus, small_spec):
        corpus = build_noisy_benchmark(small_corpus, NoiseSpec())
        noisy, clean = paired_windows(corpus, small_spec)
        assert len(noisy) == len(clean) == len(noisy_windows(corpus, small_spec))
        assert all(n.start == c.start and n.source == c.source for n, c in zip(noisy, clean))

    def test_save_and_load(self, tmp_path, small_corpus):
        corpus = build_noisy_benchmark(small_corpus, NoiseSpec(seed=5))
        save_paired(corpus, str(tmp_path))
        loaded = load_paired(str(tmp_path))
        assert loaded.provenance == corpus.provenance
        assert loaded.noise == corpus.noise
        for a, b in zip(loaded.noisy, corpus.noisy):
            np.testing.assert_allclose(a.data, b.data.astype(np.float32), rtol=1e-6)

    def test_broken_manifest_rejected(self, tmp_path, small_corpus):
        save_paired(build_noisy_benchmark(small_corpus, None), str(tmp_path))
        (tmp_path / MANIFEST_NAME).write_text('{"pairs": 3', encoding='utf-8')
        with pytest.raises(SequenceFormatError):
            load_paired(str(tmp_path))


class TestDualEvaluation:
    def test_noise_free_measurable_equals_real(self, small_corpus, small_spec):
        corpus = build_noisy_benchmark(small_corpus, None)
        measurable, real = evaluate_dual(RepeatLastFrameForecaster(5), corpus, HorizonSet.of([200], 25.0),
                                         small_spec, measure_speed=False)
        assert measurable.mpjpe_mm == real.mpjpe_mm
        assert (measurable.label, real.label) == (LABEL_MEASURABLE, LABEL_REAL)

    def test_noise_raises_measurable_error(self, small_corpus, small_spec):
        horizons = HorizonSet.of([200], 25.0)
        model = RepeatLastFrameForecaster(5)
        clean_m, _ = evaluate_dual(model, build_noisy_benchmark(small_corpus, None), horizons, small_spec,
                                   measure_speed=False)
        noisy_m, noisy_r = evaluate_dual(model, build_noisy_benchmark(small_corpus, NoiseSpec()), horizons,
                                         small_spec, measure_speed=False)
        assert noisy_m.mpjpe_mm[0] > clean_m.mpjpe_mm[0]
        assert noisy_m.time_zero_error_mm == noisy_r.time_zero_error_mm > 0


class _NoisyOnlyCorpus:
    """Exposes the noisy half and records any access to the clean half."""

    def __init__(self, corpus):
        self.noisy = corpus.noisy
        self.clean_reads = 0
        self._clean = corpus.clean

    @property
    def clean(self):
        self.clean_reads += 1
        return self._clean


class TestFinetune:
    def test_config_reduces_rate_and_drops_spec_aug(self, tiny_train_cfg):
        cfg = finetune_config(tiny_train_cfg)
        assert cfg.learning_rate == pytest.approx(tiny_train_cfg.learning_rate * 0.1)
        assert not cfg.spec_aug.enabled

    def test_config_fraction_checked(self, tiny_train_cfg):
        with pytest.raises(ConfigurationError):
            finetune_config(tiny_train_cfg, 1.5)

    def test_split_is_seeded_and_disjoint(self, small_corpus, small_spec):
        windows = noisy_windows(build_noisy_benchmark(small_corpus, None), small_spec)
        train_a, val_a = split_windows(windows, 0.2, seed=3)
        train_b, val_b = split_windows(windows, 0.2, seed=3)
        assert [w.start for w in val_a] == [w.start for w in val_b]
        assert len(train_a) + len(val_a) == len(windows) and len(val_a) == 12
        with pytest.raises(DataError):
            split_windows(windows[:1], 0.2, seed=0)

    def test_never_reads_clean_data(self, small_corpus, small_spec, tiny_model_cfg, tiny_train_cfg):
        corpus = _NoisyOnlyCorpus(build_noisy_benchmark(small_corpus, NoiseSpec()))
        base = ConformerForecaster(build_model(tiny_model_cfg))
        result = finetune_unsupervised(base, corpus, finetune_config(tiny_train_cfg.replace(epochs=1)),
                                       small_spec, horizons=None)
        assert corpus.clean_reads == 0
        assert result.before is None and result.after is None
        assert result.history.last_epoch == 1

    def test_base_model_left_untouched(self, small_corpus, small_spec, tiny_model_cfg, tiny_train_cfg):
        base = ConformerForecaster(build_model(tiny_model_cfg))
        corpus = build_noisy_benchmark(small_corpus, NoiseSpec())
        result = finetune_unsupervised(base, corpus, tiny_train_cfg.replace(epochs=1), small_spec,
                                       horizons=HorizonSet.of([200], 25.0))
        assert result.forecaster.model is not base.model
        assert all(float(p.abs().sum()) == 0.0 for p in base.model.head.parameters())
        assert result.before[0].label == LABEL_MEASURABLE


def test_noise_study_reports_every_stage(small_corpus, small_spec, tiny_model_cfg, tiny_train_cfg):
    result = run_noise_study(small_corpus[:4], small_corpus[4:5], small_corpus[5:], tiny_model_cfg,
                             tiny_train_cfg.replace(epochs=1), NoiseSpec(), small_spec,
                             HorizonSet.of([200], 25.0))
    assert tuple(result.reports) == STAGES
    assert result.time_zero_error_mm > 0
    summary = result.to_dict()
    assert set(summary['stages']) == set(STAGES)
    assert len(result.all_reports()) == 2 * len(STAGES)


@pytest.mark.slow
def test_noise_study_recovers_degradation():
    seqs = synth_corpus(seed=11, count=60, frames=150)
    spec = WindowSpec(t_in=50, t_out=25, stride=5)
    cfg = TrainConfig(learning_rate=1e-3, batch_size=32, epochs=10, seed=0, deterministic=True,
                      show_progress=False)
    result = run_noise_study(seqs[:40], seqs[40:48], seqs[48:], ModelConfig(), cfg,
                             StructuredNoiseSpec(seed=0), spec, HorizonSet.of([400, 1000], 25.0),
                             include_scratch=False)
    assert result.ordering_holds()
