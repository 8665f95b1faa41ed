import logging
from dataclasses import replace

import numpy as np
import pytest
import torch

from forecasters.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from forecasters.conformer_blocks import ConformerBlock, TimeReduction, count_parameters
from forecasters.motion_conformer import ConformerForecaster, ModelConfig, build_model
from forecasters.static_baselines import repeat_last_frame
from motion_data.windows import center_window, make_windows
from utils.error_handler import ConfigurationError, NumericalError, SequenceFormatError, ShapeMismatchError


def _inputs(batch, cfg, seed=0):
    generator = torch.Generator().manual_seed(seed)
    return torch.randn(batch, cfg.t_in, cfg.channels, generator=generator) * 300.0


class TestModelConfig:
    def test_heads_must_divide_width(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(d_model=10, n_heads=4)

    def test_input_length_must_match_reduction(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(t_in=40, t_out=25)

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigurationError):
            ModelConfig(conv_kernel=8)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigurationError):
            ModelConfig.from_dict({"d_model": 32, "depth": 3})

    def test_dict_round_trip(self):
        cfg = ModelConfig(d_model=32, n_heads=2, reduction_position="start")
        assert ModelConfig.from_dict(cfg.to_dict()) == cfg


class TestShapes:
    def test_single_person_shape(self):
        cfg = ModelConfig(d_model=32, n_blocks=1, n_heads=2)
        model = build_model(cfg).eval()
        assert model(_inputs(3, cfg)).shape == (3, 25, 39)

    def test_multi_person_shape(self):
        cfg = ModelConfig(d_model=32, n_blocks=1, n_heads=2, joints=26)
        model = build_model(cfg).eval()
        assert model(_inputs(2, cfg)).shape == (2, 25, 78)

    @pytest.mark.parametrize("position, inner", [("start", 25), ("end", 50)])
    def test_reduction_position_changes_inner_length(self, position, inner):
        cfg = ModelConfig(d_model=32, n_blocks=1, n_heads=2, reduction_position=position)
        model = build_model(cfg).eval()
        assert model.inner_length() == inner
        assert model(_inputs(1, cfg)).shape == (1, 25, 39)

    def test_wrong_input_shape_rejected(self):
        cfg = ModelConfig(d_model=32, n_blocks=1, n_heads=2)
        with pytest.raises(ShapeMismatchError):
            build_model(cfg)(torch.zeros(1, 49, 39))

    def test_time_reduction_halves_length(self):
        assert TimeReduction(8, 2)(torch.zeros(2, 10, 8)).shape == (2, 5, 8)


class TestForward:
    def test_zero_head_repeats_last_frame(self, small_corpus, tiny_model_cfg, small_spec):
        windows = [center_window(w).replace(input=w.input.astype(np.float32), target=w.target.astype(np.float32))
                   for w in make_windows(small_corpus[0], small_spec)]
        forecaster = ConformerForecaster(build_model(tiny_model_cfg, seed=4))
        predictions = forecaster.predict_batch(np.stack([w.input for w in windows]))
        for w, prediction in zip(windows, predictions):
            np.testing.assert_array_equal(prediction, repeat_last_frame(w))

    def test_float64_centered_windows_cast_at_model(self, small_corpus, tiny_model_cfg, small_spec):
        windows = [center_window(w) for w in make_windows(small_corpus[0], small_spec)]
        assert windows[0].input.dtype == np.float64
        forecaster = ConformerForecaster(build_model(tiny_model_cfg, seed=4))
        predictions = forecaster.predict_batch(np.stack([w.input for w in windows]))
        assert predictions.dtype == np.float64
        for w, prediction in zip(windows, predictions):
            np.testing.assert_allclose(prediction, repeat_last_frame(w), atol=1e-3)

    def test_non_finite_output_logged_and_raised(self, caplog, tiny_model_cfg):
        model = build_model(tiny_model_cfg)
        torch.nn.init.constant_(model.head.weight, float("nan"))
        batch = np.zeros((1, tiny_model_cfg.t_in, tiny_model_cfg.joints, 3))
        with caplog.at_level(logging.ERROR, logger="forecasters.base_forecaster"):
            with pytest.raises(NumericalError):
                ConformerForecaster(model).predict_batch(batch)
        assert "non-finite" in caplog.text

    def test_eval_mode_is_deterministic(self, tiny_model_cfg):
        model = build_model(replace(tiny_model_cfg, dropout=0.3))
        torch.nn.init.normal_(model.head.weight, std=0.1)
        model.eval()
        x = _inputs(4, model.cfg)
        with torch.no_grad():
            assert torch.equal(model(x), model(x))

    def test_batch_permutation_is_equivariant(self, tiny_model_cfg):
        model = build_model(tiny_model_cfg)
        torch.nn.init.normal_(model.head.weight, std=0.1)
        model.eval()
        x = _inputs(5, tiny_model_cfg)
        order = torch.tensor([3, 0, 4, 1, 2])
        with torch.no_grad():
            torch.testing.assert_close(model(x)[order], model(x[order]), rtol=1e-5, atol=1e-3)

    def test_param_count_independent_of_seed(self, tiny_model_cfg):
        counts = {count_parameters(build_model(tiny_model_cfg, seed=s)) for s in range(3)}
        assert len(counts) == 1

    def test_seed_fixes_initial_weights(self, tiny_model_cfg):
        a, b = build_model(tiny_model_cfg, seed=7), build_model(tiny_model_cfg, seed=7)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_large_preset_is_bigger(self):
        small = count_parameters(build_model(ModelConfig()))
        large = count_parameters(build_model(ModelConfig.large()))
        assert large > 5 * small


def _finite_difference(loss_fn, param, index, eps=1e-6):
    original = param.data[index].item()
    param.data[index] = original + eps
    plus = loss_fn().item()
    param.data[index] = original - eps
    minus = loss_fn().item()
    param.data[index] = original
    return (plus - minus) / (2 * eps)


def test_gradients_match_finite_differences():
    cfg = ModelConfig(d_model=8, n_blocks=1, n_heads=1, conv_kernel=3, ff_expansion=2, dropout=0.0,
                      t_in=4, t_out=2, joints=2)
    model = build_model(cfg, seed=1).double().eval()
    torch.manual_seed(0)
    torch.nn.init.normal_(model.head.weight, std=0.5)
    x = torch.randn(3, 4, 6, dtype=torch.float64) * 200.0
    target = torch.randn(3, 2, 6, dtype=torch.float64) * 200.0

    def loss_fn():
        # in meters
        return (((model(x) - target) * 1e-3) ** 2).mean()

    model.zero_grad()
    loss_fn().backward()
    rng = np.random.default_rng(0)
    checked = 0
    for name, param in model.named_parameters():
        analytic = param.grad.detach().clone()
        for _ in range(3):
            index = tuple(int(rng.integers(0, s)) for s in param.shape)
            numeric = _finite_difference(loss_fn, param, index)
            scale = max(abs(numeric), abs(analytic[index].item()), 1e-4)
            assert abs(numeric - analytic[index].item()) / scale < 1e-3, name
            checked += 1
    assert checked > 0


class TestCheckpoint:
    def test_round_trip_gives_identical_outputs(self, tmp_path, tiny_model_cfg):
        model = build_model(tiny_model_cfg, seed=2)
        torch.nn.init.normal_(model.head.weight, std=0.1)
        path = str(tmp_path / "m.ckpt")
        save_checkpoint(model, path, epoch=3, history=[{"epoch": 3}])

        checkpoint = load_checkpoint(path)
        assert checkpoint.kind == "motion_conformer"
        assert checkpoint.epoch == 3 and checkpoint.model.cfg == tiny_model_cfg
        batch = np.random.default_rng(0).normal(0, 300, size=(2, 10, 13, 3)).astype(np.float32)
        np.testing.assert_array_equal(checkpoint.forecaster.predict_batch(batch),
                                      ConformerForecaster(model).predict_batch(batch))

    def test_joint_mismatch_rejected(self, tmp_path, tiny_model_cfg):
        path = str(tmp_path / "m.ckpt")
        save_checkpoint(build_model(tiny_model_cfg), path)
        with pytest.raises(ShapeMismatchError):
            load_checkpoint(path, joints=26)

    def test_bad_magic_rejected(self, tmp_path, tiny_model_cfg):
        path = tmp_path / "m.ckpt"
        save_checkpoint(build_model(tiny_model_cfg), str(path))
        raw = path.read_bytes()
        assert raw.startswith(MAGIC)
        path.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(SequenceFormatError):
            load_checkpoint(str(path))


def test_conformer_block_keeps_shape():
    block = ConformerBlock(16, 2, 3, 2, 0.0)
    assert block(torch.zeros(2, 7, 16)).shape == (2, 7, 16)
