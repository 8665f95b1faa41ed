import logging
import math

import numpy as np
import pytest
import torch

from forecasters.motion_conformer import ModelConfig, build_model
from forecasters.static_baselines import RepeatLastFrameForecaster
from metrics.evaluation import evaluate
from metrics.horizons import HorizonSet
from motion_data.sequence import WindowSpec
from motion_data.synthetic import synth_corpus
from motion_data.windows import center_window, make_windows
from training.ablation import run_ablation
from training.augmentation import geometric_augment, rotate_scale, spec_augment, spec_augment_mask
from training.config import GeoAugSpec, InputNoiseSpec, SpecAugSpec, TrainConfig
from training.trainer import HISTORY_COLUMNS, TrainingHistory, euclidean_loss, horizon_index, train
from utils.error_handler import ConfigurationError, DataError, TrainingDivergedError


@pytest.fixture
def split_windows(small_corpus, small_spec):
    windows = [w for seq in small_corpus for w in make_windows(seq, small_spec)]
    return windows[:48], windows[48:]


def _pairwise(frame):
    return np.linalg.norm(frame[:, None] - frame[None], axis=-1)


class TestGeometricAugmentation:
    def test_identity_without_rotation_or_scaling(self, cv_sequence):
        w = center_window(make_windows(cv_sequence, WindowSpec(10, 5))[0])
        out = geometric_augment(w, 0.0, (1.0, 1.0), np.random.default_rng(0))
        np.testing.assert_allclose(out.input, w.input)
        np.testing.assert_allclose(out.target, w.target)

    def test_half_turn_mirrors_x_and_z(self):
        frames = np.array([[[1.0, 2.0, 3.0]]])
        np.testing.assert_allclose(rotate_scale(frames, math.pi, 1.0), [[[-1.0, 2.0, -3.0]]], atol=1e-12)

    def test_input_and_target_share_the_transform(self, cv_sequence):
        w = center_window(make_windows(cv_sequence, WindowSpec(10, 5))[0])
        out = geometric_augment(w, math.pi, (0.8, 1.2), np.random.default_rng(3))
        ratio_in = _pairwise(out.input[0])[0, 1:] / _pairwise(w.input[0])[0, 1:]
        ratio_out = _pairwise(out.target[-1])[0, 1:] / _pairwise(w.target[-1])[0, 1:]
        np.testing.assert_allclose(ratio_in, ratio_in[0])
        np.testing.assert_allclose(ratio_out, ratio_in[0])

    def test_error_scales_with_applied_scale(self, cv_sequence):
        w = center_window(make_windows(cv_sequence, WindowSpec(10, 5))[0])
        out = geometric_augment(w, 0.0, (1.5, 1.5), np.random.default_rng(0))
        before = np.linalg.norm(w.target - w.input[-1], axis=-1).mean()
        after = np.linalg.norm(out.target - out.input[-1], axis=-1).mean()
        assert after == pytest.approx(1.5 * before)

    def test_uncentered_window_rejected(self, cv_sequence):
        with pytest.raises(DataError):
            geometric_augment(make_windows(cv_sequence, WindowSpec(10, 5))[0], 1.0, (1.0, 1.0),
                              np.random.default_rng(0))


class TestSpecAugment:
    def test_disabled_is_identity(self):
        x = np.ones((10, 39))
        assert spec_augment(x, SpecAugSpec(enabled=False), np.random.default_rng(0)) is x

    def test_time_mask_is_one_contiguous_span(self):
        spec = SpecAugSpec(time_masks=1, time_mask_max=5, channel_masks=0)
        for seed in range(20):
            out = spec_augment(np.ones((20, 39)), spec, np.random.default_rng(seed))
            zero_frames = np.where((out == 0).all(axis=1))[0]
            assert len(zero_frames) <= 5
            if len(zero_frames):
                assert zero_frames[-1] - zero_frames[0] + 1 == len(zero_frames)
            assert np.all(out[(out != 0).any(axis=1)] == 1)

    def test_channel_mask_covers_all_frames(self):
        spec = SpecAugSpec(time_masks=0, channel_masks=1, channel_mask_max=6)
        mask = spec_augment_mask((20, 39), spec, np.random.default_rng(1))
        assert np.all(mask == mask[:1])

    def test_masked_count_matches_mask(self):
        spec = SpecAugSpec(time_masks=2, time_mask_max=4, channel_masks=2, channel_mask_max=5)
        rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
        out = spec_augment(np.ones((20, 39)), spec, rng_a)
        mask = spec_augment_mask((20, 39), spec, rng_b)
        assert int((out == 0).sum()) == int(mask.sum())

    def test_mask_wider_than_input_rejected(self):
        with pytest.raises(ConfigurationError):
            spec_augment(np.ones((4, 39)), SpecAugSpec(time_mask_max=10), np.random.default_rng(0))


class TestTrainConfig:
    def test_from_dict_builds_nested_specs(self):
        cfg = TrainConfig.from_dict({"learning_rate": 0.01, "spec_aug": {"enabled": False},
                                     "input_noise": {"enabled": True, "std": 10.0, "clip": 50.0}}, seed=4)
        assert cfg.seed == 4 and not cfg.spec_aug.enabled and cfg.input_noise.std == 10.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            TrainConfig.from_dict({"momentum": 0.9})

    def test_negative_rate_rejected(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(learning_rate=-1.0)

    def test_noise_clip_below_std_rejected(self):
        with pytest.raises(ConfigurationError):
            InputNoiseSpec(enabled=True, std=25.0, clip=10.0)


class TestTrainer:
    def test_euclidean_loss(self):
        pred = torch.zeros(1, 2, 3)
        target = torch.tensor([[[3.0, 4.0, 0.0], [0.0, 0.0, 5.0]]])
        assert float(euclidean_loss(pred, target)) == pytest.approx(5.0, rel=1e-6)

    def test_validation_horizon_index(self, caplog):
        assert horizon_index(25.0, 25) == 24
        assert not caplog.records
        with caplog.at_level(logging.WARNING, logger="training.trainer"):
            assert horizon_index(25.0, 5) == 4
        assert "validating at 200 ms" in caplog.text

    def test_zero_learning_rate_keeps_parameters(self, split_windows, tiny_model_cfg, tiny_train_cfg):
        model = build_model(tiny_model_cfg, seed=0)
        before = {k: v.clone() for k, v in model.state_dict().items()}
        result = train(model, *split_windows, tiny_train_cfg.replace(learning_rate=0.0))
        for name, value in model.state_dict().items():
            assert torch.equal(value, before[name]), name
        losses = result.history.column("val_loss")
        assert losses[0] == losses[-1]

    def test_fixed_seed_gives_identical_curves(self, split_windows, tiny_model_cfg, tiny_train_cfg):
        runs = [train(build_model(tiny_model_cfg, seed=1), *split_windows, tiny_train_cfg).history.to_list()
                for _ in range(2)]
        assert runs[0] == runs[1]

    def test_resume_continues_epoch_numbering(self, split_windows, tiny_model_cfg, tiny_train_cfg):
        first = train(build_model(tiny_model_cfg), *split_windows, tiny_train_cfg)
        resumed = train(first.forecaster.model, *split_windows, tiny_train_cfg,
                        start_epoch=first.history.last_epoch, history=first.history)
        assert [r.epoch for r in resumed.history.records] == [1, 2, 3, 4]

    def test_divergence_restores_and_raises(self, split_windows, tiny_model_cfg, tiny_train_cfg):
        model = build_model(tiny_model_cfg)
        with torch.no_grad():
            model.head.bias.fill_(float("inf"))
        with pytest.raises(TrainingDivergedError) as err:
            train(model, *split_windows, tiny_train_cfg)
        assert err.value.last_finite_epoch == 0

    def test_empty_split_rejected(self, split_windows, tiny_model_cfg, tiny_train_cfg):
        with pytest.raises(DataError):
            train(build_model(tiny_model_cfg), split_windows[0], [], tiny_train_cfg)

    def test_history_csv(self, tmp_path, split_windows, tiny_model_cfg, tiny_train_cfg):
        result = train(build_model(tiny_model_cfg), *split_windows, tiny_train_cfg.replace(epochs=1))
        path = tmp_path / "history.csv"
        result.history.to_csv(str(path))
        lines = path.read_text(encoding='utf-8').splitlines()
        assert lines[0] == ",".join(HISTORY_COLUMNS)
        assert len(lines) == 2
        assert TrainingHistory.from_list(result.history.to_list()).last_epoch == 1


def _desk_corpus():
    seqs = synth_corpus(seed=21, count=90, frames=150)
    spec = WindowSpec(t_in=50, t_out=25, stride=5)
    windows = [w for seq in seqs for w in make_windows(seq, spec)]
    return windows[:1200], windows[1200:]


@pytest.mark.slow
def test_toy_model_beats_repeat_last():
    train_windows, val_windows = _desk_corpus()
    assert len(train_windows) >= 1000
    cfg = TrainConfig(learning_rate=1e-3, batch_size=32, epochs=15, seed=0, deterministic=True,
                      show_progress=False)
    result = train(build_model(ModelConfig(), seed=0), train_windows, val_windows, cfg)

    horizons = HorizonSet.of([1000], 25.0)
    model_error = evaluate(result.forecaster, val_windows, horizons, measure_speed=False).mpjpe_mm[0]
    baseline_error = evaluate(RepeatLastFrameForecaster(25), val_windows, horizons).mpjpe_mm[0]
    assert model_error <= 0.7 * baseline_error


@pytest.mark.slow
def test_spec_aug_ablation_arms_converge():
    train_windows, val_windows = _desk_corpus()
    cfg = TrainConfig(learning_rate=1e-3, batch_size=32, epochs=5, seed=0, deterministic=True,
                      show_progress=False, geo_aug=GeoAugSpec(enabled=False))
    result = run_ablation(ModelConfig(), cfg, train_windows, val_windows, switch="spec_aug")
    assert len(result.arms) == 2
    assert all(arm.converged for arm in result.arms)
    assert math.isfinite(result.delta_mpjpe_1000)
