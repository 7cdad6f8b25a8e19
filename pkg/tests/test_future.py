import numpy as np
import pytest

from bevtrack.future.extension import extension_step, propagate, propagate_track, shift_forecast
from bevtrack.future.motion import (
    constant_velocity_forecast, kinematic_features, motion_backward, motion_forward, motion_inputs, predict_motion,
)
from bevtrack.model.geometry import TrajectoryForecast
from bevtrack.model.tracking import QueryQueue, Terminated, TrackState
from bevtrack.nn.params import DECODE_HEAD, MOTION_ATTN

from gradcheck import assert_grad_close, numeric_grad


def _queue(make_query, points, capacity=3):
    queue = QueryQueue(capacity=capacity)
    for t, x in points:
        queue = queue.push(make_query(x=x, timestamp=t))
    return queue


class TestKinematics:
    def test_rows_are_velocity_then_lags(self, make_query):
        slots = [make_query(x=0.0, timestamp=1), None, make_query(x=4.0, y=2.0, timestamp=3)]
        np.testing.assert_allclose(kinematic_features(slots, (9.0, 9.0), 0.5), [[4.5, 4.5], [4.5, 4.5], [2.0, 1.0]])

    def test_single_token_uses_velocity(self, make_query):
        slots = [None, None, make_query(timestamp=3)]
        np.testing.assert_allclose(kinematic_features(slots, (2.0, -1.0), 0.5), np.tile([1.0, -0.5], (3, 1)))


class TestMotionHead:
    def test_untrained_head_follows_box_velocity(self, small_params, small_config, make_query):
        queue = _queue(make_query, [(2, 0.0), (3, 1.0)])
        forecast = predict_motion(queue, make_query(x=2.0, timestamp=4), small_params, small_config, velocity=(3.0, 0.0))
        assert forecast.origin_frame == 4
        assert forecast.horizon == small_config.tau_f
        np.testing.assert_allclose(forecast.as_array(), np.tile([1.5, 0.0], (small_config.tau_f, 1)), atol=1e-12)

    def test_untrained_head_without_history_is_constant_velocity(self, small_params, small_config, make_query):
        forecast = predict_motion(
            QueryQueue(capacity=3), make_query(timestamp=0), small_params, small_config, velocity=(2.0, 0.0)
        )
        expected = constant_velocity_forecast(0, (2.0, 0.0), small_config)
        np.testing.assert_allclose(forecast.as_array(), expected.as_array(), atol=1e-12)

    def test_zeroed_decode_head_predicts_no_motion(self, small_params, small_config, make_query):
        params = dict(small_params)
        params[f"{DECODE_HEAD}.kinematic"] = np.zeros_like(small_params[f"{DECODE_HEAD}.kinematic"])
        queue = _queue(make_query, [(2, 0.0), (3, 1.0)])
        forecast = predict_motion(queue, make_query(x=2.0, timestamp=4), params, small_config, (2.0, 0.0))
        assert forecast.movements == ((0.0, 0.0),) * small_config.tau_f

    def test_coefficients_mix_lags_per_step(self, small_params, small_config, make_query):
        params = dict(small_params)
        coefficients = np.zeros_like(small_params[f"{DECODE_HEAD}.kinematic"])
        coefficients[:, 3] = np.arange(1, small_config.tau_f + 1)
        params[f"{DECODE_HEAD}.kinematic"] = coefficients
        queue = _queue(make_query, [(1, 0.0), (2, 1.0), (3, 2.0)])
        forecast = predict_motion(queue, make_query(x=6.0, timestamp=4), params, small_config, (9.0, 9.0))
        expected = np.outer(np.arange(1, small_config.tau_f + 1), [2.0, 0.0])
        np.testing.assert_allclose(forecast.as_array(), expected, atol=1e-12)

    def test_inputs_mask_and_offsets(self, small_config, make_query):
        queue = _queue(make_query, [(1, 0.0), (3, 2.0)])
        inputs = motion_inputs(queue, make_query(x=3.0, timestamp=4), small_config)
        assert inputs.mask.tolist() == [True, False, True, True]
        np.testing.assert_allclose(inputs.offsets[:, 0], [-3.0, 0.0, -1.0, 0.0])
        np.testing.assert_allclose(inputs.kinematics[:, 0], [0.0, 1.0, 0.0, 1.0])

    def test_embedding_shape(self, small_params, small_config, make_query):
        inputs = motion_inputs(QueryQueue(capacity=3), make_query(timestamp=5), small_config)
        movements, cache = motion_forward(inputs, small_params, small_config)
        assert movements.shape == (small_config.tau_f, 2)
        assert cache.embedding.rows.shape == (small_config.tau_f, small_config.d)
        assert cache.embedding.origin_frame == 5

    def test_gradients_match_finite_differences(self, small_params, small_config, make_query, rng):
        params = {k: np.array(v, dtype=np.float64) for k, v in small_params.items()}
        params[f"{DECODE_HEAD}.w1"] = rng.standard_normal(params[f"{DECODE_HEAD}.w1"].shape) * 0.5
        params[f"{DECODE_HEAD}.b1"] = rng.standard_normal(2) * 0.5
        queue = QueryQueue(capacity=3)
        for t, x in [(1, 0.0), (3, 2.0)]:
            queue = queue.push(make_query(x=x, timestamp=t, fill=0.0).model_copy(
                update={"feature": tuple(rng.standard_normal(8))}
            ))
        inputs = motion_inputs(queue, make_query(x=3.0, timestamp=4, fill=0.2), small_config)
        upstream = rng.standard_normal((small_config.tau_f, 2))

        def loss():
            return float(np.sum(motion_forward(inputs, params, small_config)[0] * upstream))

        _, cache = motion_forward(inputs, params, small_config)
        grads = motion_backward(cache, upstream)
        for name in (
            f"{DECODE_HEAD}.kinematic", f"{DECODE_HEAD}.w0", f"{DECODE_HEAD}.b1",
            f"{MOTION_ATTN}.time_proj", f"{MOTION_ATTN}.offset_proj",
            f"{MOTION_ATTN}.layer0.attn.wq", f"{MOTION_ATTN}.layer0.attn.bv", f"{MOTION_ATTN}.layer0.ffn.w0",
        ):
            assert_grad_close(grads[name], numeric_grad(loss, params[name]))


def test_constant_velocity_forecast(small_config):
    forecast = constant_velocity_forecast(3, (2.0, -1.0), small_config)
    assert forecast.origin_frame == 3
    assert forecast.movements == ((1.0, -0.5),) * small_config.tau_f


def test_shift_forecast_repeats_last_step():
    forecast = TrajectoryForecast(origin_frame=2, movements=((1.0, 0.0), (2.0, 0.0), (3.0, 1.0)))
    shifted = shift_forecast(forecast)
    assert shifted.origin_frame == 3
    assert shifted.movements == ((2.0, 0.0), (3.0, 1.0), (3.0, 1.0))


class TestExtension:
    @pytest.fixture
    def track(self, make_query, make_box, small_config):
        steps = tuple((float(k), 0.0) for k in range(1, small_config.tau_f + 1))
        return TrackState(
            id=7,
            last_confident_frame=4,
            query=make_query(x=0.0, timestamp=5),
            forecast=TrajectoryForecast(origin_frame=5, movements=steps),
            box=make_box(x=0.0, score=0.9),
        )

    @staticmethod
    def _low(track, make_box):
        box = make_box(x=track.box.center[0], score=0.1)
        return track.query, box, track.forecast

    def test_propagate_moves_query_and_box(self, track):
        moved = propagate_track(track)
        assert moved.query.center[0] == pytest.approx(1.0)
        assert moved.box.center[0] == pytest.approx(1.0)
        assert moved.query.timestamp == 6
        assert moved.query.feature == track.query.feature
        assert moved.forecast.origin_frame == 6

    def test_propagate_keeps_track_order(self, track):
        other = track.model_copy(update={"id": 8})
        moved = propagate([track, other])
        assert [t.id for t in moved] == [7, 8]
        assert [t.query.center[0] for t in moved] == pytest.approx([1.0, 1.0])

    def test_confident_output_is_adopted(self, track, make_query, make_box, small_config):
        forecast = TrajectoryForecast(origin_frame=5, movements=((0.5, 0.5),) * small_config.tau_f)
        result = extension_step(track, (make_query(x=3.0, timestamp=5), make_box(x=3.0, score=0.6), forecast),
                                small_config)
        assert result.active and result.extension_count == 0
        assert result.last_confident_frame == 5
        assert result.query.center[:2] == pytest.approx((3.5, 0.5))
        assert result.box.score == 0.6

    def test_coasting_follows_forecast_prefix_sums(self, track, make_box, small_config):
        current = track
        for m in range(1, small_config.tau_e + 1):
            current = extension_step(current, self._low(current, make_box), small_config)
            assert not current.active
            assert current.extension_count == m
            assert current.query.center[0] == pytest.approx(m * (m + 1) / 2)
            assert current.box.score == 0.9
            assert current.last_confident_frame == 4

    def test_terminates_after_tau_e_frames(self, track, make_box, small_config):
        current = track
        for _ in range(small_config.tau_e):
            current = extension_step(current, self._low(current, make_box), small_config)
        result = extension_step(current, self._low(current, make_box), small_config)
        assert result == Terminated(id=7, frame=5 + small_config.tau_e)

    def test_confident_output_resets_count(self, track, make_box, small_config):
        current = extension_step(track, self._low(track, make_box), small_config)
        current = extension_step(current, self._low(current, make_box), small_config)
        query, _, forecast = self._low(current, make_box)
        result = extension_step(current, (query, make_box(score=0.8), forecast), small_config)
        assert result.active and result.extension_count == 0
        assert result.last_confident_frame == 7

    def test_zero_extension_terminates_immediately(self, track, make_box, small_config):
        config = small_config.model_copy(update={"tau_e": 0})
        assert isinstance(extension_step(track, self._low(track, make_box), config), Terminated)
