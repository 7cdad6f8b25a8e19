from itertools import permutations

import numpy as np
import pytest

from bevtrack.baselines.association import associate, greedy, hungarian
from bevtrack.baselines.kalman import KalmanTrack, kalman_predict, kalman_update
from bevtrack.baselines.tbd import run_tbd
from bevtrack.baselines.velocity import run_velocity_variant
from bevtrack.errors import ConfigError, NumericalError
from bevtrack.model.config import BaselineConfig
from bevtrack.model.records import DetectionRecord
from bevtrack.simulator.world import simulate


def brute_force_cost(cost):
    n_rows, n_cols = cost.shape
    if n_rows <= n_cols:
        return min(sum(cost[r, c] for r, c in enumerate(perm)) for perm in permutations(range(n_cols), n_rows))
    return brute_force_cost(cost.T)


class TestAssignment:
    def test_hungarian_is_optimal(self, rng):
        for _ in range(50):
            shape = tuple(rng.integers(1, 6, size=2))
            cost = rng.uniform(0.0, 10.0, size=shape)
            pairs = hungarian(cost)
            assert len(pairs) == min(shape)
            assert len({r for r, _ in pairs}) == len({c for _, c in pairs}) == len(pairs)
            assert sum(cost[r, c] for r, c in pairs) == pytest.approx(brute_force_cost(cost))

    def test_hungarian_never_costs_more_than_greedy(self, rng):
        for _ in range(50):
            cost = rng.uniform(0.0, 4.0, size=tuple(rng.integers(1, 6, size=2)))
            assert sum(cost[p] for p in hungarian(cost)) <= sum(cost[p] for p in greedy(cost)) + 1e-12
            optimal, quick = associate(cost, 2.0, "hungarian"), associate(cost, 2.0, "greedy")
            assert len(optimal) >= len(quick)
            if len(optimal) == len(quick):
                assert sum(cost[p] for p in optimal) <= sum(cost[p] for p in quick) + 1e-12

    def test_hungarian_rejects_non_finite(self):
        with pytest.raises(NumericalError) as exc:
            hungarian(np.array([[1.0, np.nan], [0.0, 2.0]]))
        assert exc.value.error_code == "NON_FINITE"

    def test_empty_matrices(self):
        assert hungarian(np.zeros((0, 3))) == []
        assert greedy(np.zeros((2, 0))) == []
        assert associate(np.zeros((0, 0)), 2.0) == []

    def test_greedy_takes_cheapest_first(self):
        cost = np.array([[1.0, 2.0], [1.5, 10.0]])
        assert greedy(cost) == [(0, 0), (1, 1)]
        assert hungarian(cost) == [(0, 1), (1, 0)]

    def test_gate_drops_far_pairs(self):
        cost = np.array([[0.5, np.inf], [np.inf, 3.0]])
        assert associate(cost, 2.0, "hungarian") == [(0, 0)]
        assert associate(cost, 2.0, "greedy") == [(0, 0)]

    def test_gate_does_not_force_bad_pairs(self):
        cost = np.array([[1.0, 1.5], [1.2, 50.0]])
        assert associate(cost, 2.0) == [(0, 1), (1, 0)]

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            associate(np.ones((1, 1)), 2.0, "auction")


class TestKalman:
    def test_predict_moves_with_velocity(self, make_box):
        track = KalmanTrack.from_box(0, make_box(1.0, 2.0, velocity=(2.0, -1.0)), 0.5)
        predicted = kalman_predict(track, 0.5, 0.1)
        assert predicted.x[:2] == pytest.approx([2.0, 1.5])
        assert np.trace(predicted.P) > np.trace(track.P)
        np.testing.assert_allclose(predicted.P, predicted.P.T)

    def test_predict_rejects_bad_step(self, make_box):
        with pytest.raises(ConfigError):
            kalman_predict(KalmanTrack.from_box(0, make_box(), 0.5), 0.0)

    def test_update_pulls_towards_measurement(self, make_box):
        track = KalmanTrack.from_box(0, make_box(0.0, 0.0), 0.5)
        updated = kalman_update(track, make_box(1.0, 0.0, score=0.6), 0.5)
        assert 0.0 < updated.x[0] < 1.0
        assert np.trace(updated.P) < np.trace(track.P)
        assert updated.hits == 2 and updated.misses == 0
        assert updated.score == 0.6

    def test_update_unwraps_yaw(self, make_box):
        track = KalmanTrack.from_box(0, make_box(yaw=3.1), 0.5)
        updated = kalman_update(track, make_box(yaw=-3.1), 0.5)
        assert abs(updated.x[3]) > 3.0

    def test_matches_closed_form(self, make_box):
        dt, q, r = 0.5, 0.1, 0.5
        track = KalmanTrack.from_box(0, make_box(1.0, 2.0, velocity=(2.0, -1.0), yaw=0.2), r)
        F = np.eye(9)
        F[0, 7] = F[1, 8] = dt
        x = F @ track.x
        P = F @ track.P @ F.T + q ** 2 * np.eye(9)
        predicted = kalman_predict(track, dt, q)
        np.testing.assert_allclose(predicted.x, x, atol=1e-10)
        np.testing.assert_allclose(predicted.P, P, atol=1e-10)

        z = np.array([2.3, 1.2, 0.8, 0.3, 4.5, 1.9, 1.6])
        H = np.eye(7, 9)
        K = P @ H.T @ np.linalg.inv(H @ P @ H.T + r ** 2 * np.eye(7))
        updated = kalman_update(predicted, make_box(2.3, 1.2, yaw=0.3, score=0.6), r)
        np.testing.assert_allclose(updated.x, x + K @ (z - H @ x), atol=1e-10)
        np.testing.assert_allclose(updated.P, (np.eye(9) - K @ H) @ P, atol=1e-10)

    def test_to_box_round_trip(self, make_box):
        box = make_box(3.0, 4.0, score=0.7, velocity=(1.0, 0.5), class_id=1, yaw=0.2)
        restored = KalmanTrack.from_box(5, box, 0.5).to_box()
        assert restored.center == pytest.approx(box.center)
        assert restored.velocity == pytest.approx(box.velocity)
        assert restored.class_id == 1


class TestTrackingByDetection:
    def test_gap_longer_than_max_age_switches_id(self, straight_scenario):
        sim = simulate(straight_scenario(occlusion=(4, 8)), d=4)
        result = run_tbd(sim.detections, BaselineConfig(max_age=3))
        assert {r.id for r in result.tracks} == {0, 1}

    def test_short_gap_is_bridged(self, straight_scenario):
        sim = simulate(straight_scenario(occlusion=(5, 6)), d=4)
        result = run_tbd(sim.detections, BaselineConfig(max_age=3))
        assert {r.id for r in result.tracks} == {0}
        assert 5 not in {r.frame for r in result.tracks}

    def test_low_scores_are_ignored(self, make_box):
        dets = [DetectionRecord.from_box(f, make_box(float(f), score=0.1), [0.0]) for f in range(3)]
        assert run_tbd(dets, BaselineConfig(score_thresh=0.2)).tracks == []

    def test_min_hits_delays_output(self, straight_scenario):
        sim = simulate(straight_scenario(frames=5), d=4)
        result = run_tbd(sim.detections, BaselineConfig(min_hits=3))
        assert [r.frame for r in result.tracks] == [2, 3, 4]

    @pytest.mark.parametrize("mode", ["hungarian", "greedy"])
    def test_noiseless_straight_run_log(self, straight_scenario, mode):
        sim = simulate(straight_scenario(frames=5), d=4)
        rows = run_tbd(sim.detections, BaselineConfig(mode=mode)).tracks
        assert len(rows) == 5
        for f, r in enumerate(rows):
            expected = dict(
                frame=f, id=0, x=-10.0 + f, y=3.0, z=0.8, l=4.5, w=1.9, h=1.6, yaw=0.0, vx=2.0, vy=0.0,
                score=0.75, class_id=0,
            )
            assert r.model_dump() == pytest.approx(expected, abs=1e-9)

    def test_classes_never_associate(self, make_box):
        dets = [
            DetectionRecord.from_box(0, make_box(0.0, class_id=0), [0.0]),
            DetectionRecord.from_box(1, make_box(0.1, class_id=1), [0.0]),
        ]
        assert {r.id for r in run_tbd(dets, BaselineConfig()).tracks} == {0, 1}


def test_velocity_variant_forecasts_follow_box_velocity(straight_scenario, small_params, small_config):
    sim = simulate(straight_scenario(), d=8)
    result = run_velocity_variant(sim.detections, small_params, small_config)
    assert {r.id for r in result.tracks} == {0}
    assert result.forecasts
    for forecast in result.forecasts:
        steps = [v for step in forecast.movements for v in step]
        assert steps == pytest.approx([1.0, 0.0] * small_config.tau_f)
