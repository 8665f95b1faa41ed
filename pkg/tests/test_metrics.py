import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import FPS, constant_velocity_sequence, static_sequence
from forecasters.base_forecaster import BaseForecaster
from forecasters.static_baselines import LastDeltaForecaster, RepeatLastFrameForecaster
from metrics.evaluation import evaluate, predict_windows
from metrics.horizons import HorizonSet
from metrics.pose_metrics import fade, fce, format_metric, mpjpe, mpjpe_per_frame, vim
from metrics.report import (MetricReport, compare_reports, format_table, load_report, report_row, save_report,
                            write_table_csv)
from metrics.throughput import measure_fps, measure_latency
from motion_data.sequence import WindowSpec
from motion_data.windows import make_windows
from utils.error_handler import ConfigurationError, DataError, ShapeMismatchError

coords = st.floats(-2000, 2000, allow_nan=False, allow_infinity=False)


def pose_tensors(shape=(3, 2, 4, 3)):
    return arrays(np.float64, shape, elements=coords)


def loop_mpjpe(gt, pred, t):
    total, count = 0.0, 0
    for p in range(gt.shape[1]):
        for j in range(gt.shape[2]):
            total += math.sqrt(sum((gt[t, p, j, c] - pred[t, p, j, c]) ** 2 for c in range(3)))
            count += 1
    return total / count


def loop_vim(gt, pred, t):
    per_person = []
    for p in range(gt.shape[1]):
        per_person.append(math.sqrt(sum((gt[t, p, j, c] - pred[t, p, j, c]) ** 2
                                        for j in range(gt.shape[2]) for c in range(3))))
    return sum(per_person) / len(per_person)


class TestPoseMetrics:
    def test_matches_scalar_loop_on_random_tensors(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            gt = rng.normal(0, 500, size=(2, 2, 5, 3))
            pred = rng.normal(0, 500, size=(2, 2, 5, 3))
            m, v = mpjpe(gt, pred, 1), vim(gt, pred, 1)
            assert m == pytest.approx(loop_mpjpe(gt, pred, 1), rel=1e-9)
            assert v == pytest.approx(loop_vim(gt, pred, 1), rel=1e-9)
            assert v >= math.sqrt(5) * m * (1 - 1e-12)

    @given(gt=pose_tensors(), pred=pose_tensors())
    @settings(max_examples=100, deadline=None)
    def test_symmetric_and_nonnegative(self, gt, pred):
        assert mpjpe(gt, pred, 2) == pytest.approx(mpjpe(pred, gt, 2))
        assert mpjpe(gt, pred, 2) >= 0
        assert mpjpe(gt, gt, 0) == 0.0

    @given(gt=pose_tensors(), pred=pose_tensors(), shift=st.tuples(coords, coords, coords))
    @settings(max_examples=100, deadline=None)
    def test_translation_invariant(self, gt, pred, shift):
        v = np.asarray(shift)
        assert mpjpe(gt + v, pred + v, 1) == pytest.approx(mpjpe(gt, pred, 1), abs=1e-6)

    def test_rotation_invariant(self):
        rng = np.random.default_rng(4)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        for _ in range(50):
            gt = rng.normal(0, 500, size=(3, 2, 6, 3))
            pred = rng.normal(0, 500, size=(3, 2, 6, 3))
            assert mpjpe(gt @ q.T, pred @ q.T, 2) == pytest.approx(mpjpe(gt, pred, 2), rel=1e-9)
            assert vim(gt @ q.T, pred @ q.T, 2) == pytest.approx(vim(gt, pred, 2), rel=1e-9)

    def test_single_joint_example(self):
        gt = np.zeros((1, 1, 1, 3))
        pred = np.array([3.0, 4.0, 0.0]).reshape(1, 1, 1, 3)
        assert mpjpe(gt, pred, 0) == 5.0
        assert vim(gt, pred, 0) == 5.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError):
            mpjpe(np.zeros((2, 1, 3, 3)), np.zeros((2, 1, 4, 3)), 0)

    def test_frame_index_checked(self):
        with pytest.raises(DataError):
            mpjpe(np.zeros((2, 1, 3, 3)), np.zeros((2, 1, 3, 3)), 2)

    def test_per_frame_curve(self):
        gt = np.zeros((3, 1, 2, 3))
        pred = np.zeros((3, 1, 2, 3))
        pred[2, :, :, 0] = 7.0
        np.testing.assert_allclose(mpjpe_per_frame(gt, pred), [0.0, 0.0, 7.0])


class TestRealtimeMetrics:
    @pytest.mark.parametrize("m, t, fps, shown", [
        (197, 1000, 6, "230"),
        (148, 1000, 45, "151"),
        (93.1, 400, 213, "94.2"),
    ])
    def test_fade_table_values(self, m, t, fps, shown):
        assert format_metric(fade(m, t, fps)) == shown

    def test_fade_exact(self):
        assert abs(fade(197, 1000, 6) - (197 + 197 / 6)) < 1e-9
        assert abs(fade(93.1, 400, 213) - (93.1 + 93.1 * 2.5 / 213)) < 1e-9

    @pytest.mark.parametrize("fps, shown", [(6, "333"), (28, "71"), (293, "7")])
    def test_fce_table_values(self, fps, shown):
        assert format_metric(fce(fps), integer=True) == shown

    @given(m=st.floats(0.1, 5000), t=st.floats(40, 2000), fps=st.floats(0.5, 1000))
    @settings(max_examples=200, deadline=None)
    def test_fade_bounds_and_monotonic_in_fps(self, m, t, fps):
        assert fade(m, t, fps) >= m
        assert fade(m, t, fps * 2) < fade(m, t, fps)
        assert fce(fps * 2) < fce(fps)

    def test_fade_rejects_zero_fps(self):
        with pytest.raises(ConfigurationError):
            fade(100, 1000, 0)

    def test_display_rounding_is_half_up(self):
        assert format_metric(0.25) == "0.3"
        assert format_metric(100.5) == "101"
        assert format_metric(None) == "-"


class TestHorizons:
    def test_frame_index_at_25_hz(self):
        horizons = HorizonSet.of([1000, 400], 25.0)
        assert horizons.horizons_ms == (400.0, 1000.0)
        assert horizons.indices(25) == [9, 24]

    def test_horizon_beyond_output_rejected(self):
        with pytest.raises(ConfigurationError):
            HorizonSet.of([2000], 25.0).indices(25)

    def test_nonpositive_horizon_rejected(self):
        with pytest.raises(ConfigurationError):
            HorizonSet.of([0], 25.0)


def _report(name, mpjpe_values, fps=None, label="", horizons=(400, 1000)):
    return MetricReport.build(name, 1000, list(horizons), mpjpe_values, [m * 3 for m in mpjpe_values], fps,
                              sample_count=4, label=label)


class TestReports:
    def test_static_report_has_no_timing(self):
        report = _report("repeat_last", [50.0, 120.0])
        assert report.fps is None and report.fce_mm is None
        assert report.fade_mm == report.mpjpe_mm
        assert report_row(report)[3:6] == ["-", "-", "-"]

    def test_fade_derived_from_fps(self):
        report = _report("net", [93.1, 148.0], fps=213.0)
        assert report.fade_mm[0] == pytest.approx(fade(93.1, 400, 213.0))
        assert report.fce_mm == pytest.approx(2000 / 213)

    def test_without_timing(self):
        report = _report("net", [10.0, 20.0], fps=100.0).without_timing()
        assert report.timing_excluded and report.fps is None and report.fade_mm == [10.0, 20.0]

    def test_json_round_trip(self, tmp_path):
        report = _report("net", [10.0, 20.0], fps=50.0, label="real")
        save_report(report, str(tmp_path / "r.json"))
        assert load_report(str(tmp_path / "r.json")) == report
        assert MetricReport.from_json(report.to_json()) == report

    def test_negative_value_rejected(self):
        with pytest.raises(DataError):
            MetricReport.build("x", 0, [1000], [-1.0], [1.0], None, 1)

    def test_compare_orders_worst_first_and_disambiguates(self):
        reports = compare_reports([_report("a", [10, 20]), _report("b", [10, 90]), _report("a", [10, 50])])
        assert [r.model_name for r in reports] == ["b", "a", "a (2)"]

    def test_table_layout(self):
        table = format_table([_report("repeat_last", [61.0, 143.0]), _report("net", [40.0, 93.1], fps=213.0)])
        lines = table.splitlines()
        assert lines[0].split(" | ")[0].strip() == "Method"
        assert "MPJPE 400/1000" in lines[0] and "FADE 400/1000" in lines[0]
        assert "61.0 / 143" in lines[2]
        assert set(lines[1]) <= {"-", "+"}

    def test_csv_has_table_columns(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table_csv([_report("a", [1.0, 2.0])], str(path))
        rows = path.read_text(encoding='utf-8').splitlines()
        assert rows[0] == "Method,Size,MPJPE,FPS,FCE,FADE"
        assert rows[1] == "a,1.0K,1.0 / 2.0,-,-,-"


class TestEvaluation:
    def test_repeat_last_on_static_corpus_is_zero(self):
        windows = make_windows(static_sequence(frames=60), WindowSpec(10, 5, stride=5))
        report = evaluate(RepeatLastFrameForecaster(5), windows, HorizonSet.of([200], FPS))
        assert report.mpjpe_mm == [0.0]
        assert report.sample_count == len(windows)

    def test_predictions_are_global(self):
        seq = constant_velocity_sequence(frames=30)
        windows = make_windows(seq, WindowSpec(10, 5, stride=5))
        predictions = predict_windows(LastDeltaForecaster(5), windows)
        np.testing.assert_allclose(predictions[1], windows[1].target, atol=1e-9)

    def test_horizon_fps_must_match(self):
        windows = make_windows(static_sequence(), WindowSpec(10, 5))
        with pytest.raises(ConfigurationError):
            evaluate(RepeatLastFrameForecaster(5), windows, HorizonSet.of([200], 50.0))


class _EchoForecaster(BaseForecaster):
    name = "echo"

    def predict_batch(self, inputs):
        return np.repeat(inputs[:, -1:], self.t_out, axis=1)


class _SleepingForecaster(BaseForecaster):
    name = "sleeper"

    def predict_batch(self, inputs):
        time.sleep(0.01)
        return np.repeat(inputs[:, -1:], self.t_out, axis=1)


class TestThroughput:
    def test_fps_and_latency_are_positive(self):
        window = make_windows(static_sequence(), WindowSpec(10, 5))[0]
        model = _EchoForecaster(5)
        assert measure_fps(model, window, warmup=1, iters=10) > 0
        stats = measure_latency(model, window, warmup=1, iters=10, repeats=3)
        assert stats.p95_ms >= stats.p50_ms > 0
        assert stats.repeats == 3

    def test_too_few_iterations_rejected(self):
        window = make_windows(static_sequence(), WindowSpec(10, 5))[0]
        with pytest.raises(ConfigurationError):
            measure_fps(_EchoForecaster(5), window, iters=2)

    def test_fps_tracks_call_duration(self):
        window = make_windows(static_sequence(), WindowSpec(10, 5))[0]
        assert measure_fps(_SleepingForecaster(5), window, warmup=1, iters=20) == pytest.approx(100.0, abs=20.0)
