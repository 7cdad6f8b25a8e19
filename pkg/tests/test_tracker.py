import itertools
import logging

import numpy as np
import pytest

from bevtrack.baselines.association import GATED_COST
from bevtrack.errors import ConfigError, FrameOrderError, ShapeError
from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import TrajectoryForecast
from bevtrack.model.records import DetectionRecord, FrameDetections
from bevtrack.model.tracking import TrackerState, TrackState
from bevtrack.nn.params import REFINE_HEAD, init_params
from bevtrack.simulator.suites import scenario_suite
from bevtrack.simulator.world import simulate
from bevtrack.tracker.decoder_stub import decode_stub
from bevtrack.tracker.engine import run_sequence, select_outputs, step
from bevtrack.tracker.modes import MODE_ALIASES, MODES, canonical_mode, run_mode


def _detection(make_box, frame, x, y=0.0, score=0.9, fill=1.0, d=8):
    return DetectionRecord.from_box(frame, make_box(x, y, score=score), [fill] * d)


def _track(make_query, make_box, track_id, x, y=0.0, frame=3, d=8):
    return TrackState(
        id=track_id,
        last_confident_frame=frame - 1,
        query=make_query(x, y, timestamp=frame, d=d, fill=0.0, track_ref=track_id),
        forecast=TrajectoryForecast(origin_frame=frame, movements=((1.0, 0.0),) * 8),
        box=make_box(x, y, score=0.8),
    )


class TestDecoderStub:
    def test_match_blend_and_births(self, small_config, make_query, make_box):
        state = TrackerState(
            tracks=(_track(make_query, make_box, 0, 0.0), _track(make_query, make_box, 1, 10.0)),
            next_id=2, frame=2,
        )
        frame = FrameDetections(frame=3, detections=(
            _detection(make_box, 3, 0.5, score=0.9),
            _detection(make_box, 3, 30.0, score=0.8),
            _detection(make_box, 3, -30.0, score=0.3),
        ))
        out = decode_stub(state, frame, small_config)

        assert out.matched == {0}
        query, box = out.tracks[0]
        assert query.center[0] == pytest.approx(0.5)
        assert query.track_ref == 0
        np.testing.assert_allclose(query.feature, [small_config.feature_blend] * 8)
        assert box.score == 0.9

        _, lost = out.tracks[1]
        assert lost.score == 0.0
        assert lost.center[0] == pytest.approx(10.0)
        assert out.tracks[1][0].timestamp == 3

        assert len(out.births) == 1
        assert out.births[0][1].center[0] == pytest.approx(30.0)

    def test_nearest_detection_wins_over_higher_score(self, small_config, make_query, make_box):
        state = TrackerState(tracks=(_track(make_query, make_box, 0, 0.0),), next_id=1, frame=2)
        frame = FrameDetections(frame=3, detections=(
            _detection(make_box, 3, 0.2, score=0.5),
            _detection(make_box, 3, 1.0, score=0.95),
        ))
        out = decode_stub(state, frame, small_config)
        assert out.tracks[0][1].score == 0.5
        assert out.births[0][1].center[0] == pytest.approx(1.0)

    def test_crossed_pairs_take_the_cheaper_assignment(self, small_config, make_query, make_box):
        state = TrackerState(
            tracks=(_track(make_query, make_box, 0, 0.0), _track(make_query, make_box, 1, 2.5)), next_id=2, frame=2,
        )
        frame = FrameDetections(frame=3, detections=(
            _detection(make_box, 3, 1.2, score=0.95),
            _detection(make_box, 3, -1.0, score=0.5),
        ))
        out = decode_stub(state, frame, small_config)
        assert out.matched == {0, 1}
        assert out.tracks[0][1].center[0] == pytest.approx(-1.0)
        assert out.tracks[1][1].center[0] == pytest.approx(1.2)
        assert out.births == []

    def test_assignment_matches_brute_force(self, small_config, make_query, make_box, rng):
        for case in range(30):
            points = rng.uniform(0.0, 3.0, size=(6, 2))
            tracks = tuple(_track(make_query, make_box, i, *points[i]) for i in range(3))
            frame = FrameDetections(frame=3, detections=tuple(
                _detection(make_box, 3, x, y, score=0.5) for x, y in points[3:]
            ))
            out = decode_stub(TrackerState(tracks=tracks, next_id=3, frame=2), frame, small_config)

            def gated(track, det):
                d = float(np.hypot(*(points[track] - points[3 + det])))
                return d if d < small_config.gate_radius else GATED_COST

            best = min(sum(gated(t, d) for t, d in enumerate(perm)) for perm in itertools.permutations(range(3)))
            total = sum(
                float(np.hypot(*(points[t] - np.asarray(out.tracks[t][1].center[:2])))) for t in out.matched
            ) + GATED_COST * (3 - len(out.matched))
            assert total == pytest.approx(best, rel=0.0, abs=1e-6), case

    def test_detection_queries_cap_births(self, small_config, make_box):
        frame = FrameDetections(frame=0, detections=(
            _detection(make_box, 0, 0.0, score=0.6),
            _detection(make_box, 0, 20.0, score=0.9),
            _detection(make_box, 0, 40.0, score=0.7),
        ))
        out = decode_stub(TrackerState(), frame, small_config.model_copy(update={"detection_queries": 2}))
        assert [b.center[0] for _, b in out.births] == pytest.approx([20.0, 40.0])

    def test_rejects_wrong_feature_length(self, small_config, make_box):
        frame = FrameDetections(frame=0, detections=(_detection(make_box, 0, 0.0, d=5),))
        with pytest.raises(ShapeError) as exc:
            decode_stub(TrackerState(), frame, small_config)
        assert exc.value.error_code == "DIM_MISMATCH"


class TestStep:
    def test_frames_must_advance(self, small_params, small_config):
        state = TrackerState(frame=4)
        with pytest.raises(FrameOrderError) as exc:
            step(state, FrameDetections(frame=4), small_params, small_config)
        assert exc.value.error_code == "FRAME_OUT_OF_ORDER"

    def test_skipped_frames_carry_tracks(self, small_params, small_config, make_box, caplog):
        first = step(TrackerState(), FrameDetections(frame=0, detections=(
            DetectionRecord.from_box(0, make_box(0.0, velocity=(2.0, 0.0), score=0.8), [0.1] * 8),
        )), small_params, small_config)
        with caplog.at_level(logging.WARNING):
            later = step(first.state, FrameDetections(frame=3), small_params, small_config)
        assert "missing" in caplog.text
        assert later.state.tracks[0].query.center[0] == pytest.approx(4.0)
        assert later.state.tracks[0].extension_count == 1

    def test_birth_outputs_forecast(self, small_params, small_config, make_box):
        result = step(TrackerState(), FrameDetections(frame=0, detections=(
            DetectionRecord.from_box(0, make_box(1.0, velocity=(2.0, 0.0), score=0.8), [0.1] * 8),
        )), small_params, small_config)
        assert result.births == [0]
        assert [i for i, _ in result.boxes] == [0]
        assert len(result.forecasts) == 1
        assert len(result.forecasts[0].movements) == small_config.tau_f
        assert result.state.next_id == 1
        assert result.state.frame == 0


def test_select_outputs(make_box):
    config = TrackerConfig(d=8, n_heads=2, max_output=2)
    boxes = [(3, make_box(score=0.5)), (1, make_box(score=0.9)), (2, make_box(score=0.1)), (0, make_box(score=0.7))]
    assert [i for i, _ in select_outputs(boxes, config)] == [0, 1]


class TestSequences:
    def test_straight_run_keeps_one_id(self, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(), d=8)
        result = run_sequence(sim.detections, small_params, small_config)
        assert {r.id for r in result.tracks} == {0}
        assert [r.frame for r in result.tracks] == list(range(12))
        for row, gt in zip(result.tracks, sim.gt):
            assert (row.x, row.y) == pytest.approx((gt.x, gt.y), abs=1e-9)

    def test_occlusion_is_bridged(self, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(occlusion=(5, 7)), d=8)
        result = run_sequence(sim.detections, small_params, small_config)
        assert {r.id for r in result.tracks} == {0}
        coasted = [r for r in result.tracks if 5 <= r.frame <= 7]
        assert len(coasted) == 3
        for row in coasted:
            assert row.x == pytest.approx(-10.0 + row.frame, abs=1e-6)
            assert row.score < 0.75

    def test_without_extension_the_id_changes(self, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(occlusion=(5, 7)), d=8)
        result = run_mode("query-no-ext", sim.detections, small_params, small_config)
        assert {r.id for r in result.tracks} == {0, 1}
        assert not [r for r in result.tracks if 5 <= r.frame <= 7]

    def test_trailing_empty_frames(self, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(frames=6), d=8)
        result = run_sequence(sim.detections, small_params, small_config, last_frame=8)
        assert max(r.frame for r in result.tracks) == 8

    def test_forecasts_follow_emitted_boxes(self, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(), d=8)
        result = run_sequence(sim.detections, small_params, small_config)
        assert [(f.frame, f.id) for f in result.forecasts] == [(r.frame, r.id) for r in result.tracks]
        assert result.forecasts[-1].movements[0] == pytest.approx((1.0, 0.0), abs=1e-6)

    def test_weights_must_fit_config(self, straight_scenario, small_config):
        sim = simulate(straight_scenario(), d=8)
        params = init_params(TrackerConfig(d=16, n_heads=2, n_layers=1))
        with pytest.raises(ShapeError) as exc:
            run_sequence(sim.detections, params, small_config)
        assert exc.value.error_code == "DIM_MISMATCH"

    def test_empty_log(self, small_params, small_config):
        assert run_sequence([], small_params, small_config).tracks == []


class TestModes:
    @pytest.mark.parametrize("mode", MODES)
    def test_every_mode_tracks_the_straight_agent(self, mode, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(), d=8)
        result = run_mode(mode, sim.detections, small_params, small_config)
        assert {r.id for r in result.tracks} == {0}
        assert len(result.tracks) == 12

    def test_unknown_mode(self, small_params, small_config):
        with pytest.raises(ConfigError) as exc:
            run_mode("oracle", [], small_params, small_config)
        assert exc.value.error_code == "UNKNOWN_MODE"

    @pytest.mark.parametrize("alias, mode", sorted(MODE_ALIASES.items()))
    def test_aliases_run_the_same_pipeline(self, alias, mode, straight_scenario, small_params, small_config):
        sim = simulate(straight_scenario(occlusion=(4, 6)), d=8)
        assert canonical_mode(alias) == mode
        aliased = run_mode(alias, sim.detections, small_params, small_config)
        assert aliased.tracks == run_mode(mode, sim.detections, small_params, small_config).tracks


class TestInvariants:
    @pytest.fixture
    def crowd(self):
        scenario = scenario_suite("crowded", 1, seed=3, frames=12)[0]
        sensor = scenario.sensor.model_copy(update={"score_spread": 0.05})
        return simulate(scenario.model_copy(update={"sensor": sensor}), d=8)

    def test_first_frame_reaches_later_boxes(self, straight_scenario, small_params, small_config, rng):
        params = dict(small_params)
        params[f"{REFINE_HEAD}.w1"] = rng.standard_normal(small_params[f"{REFINE_HEAD}.w1"].shape) * 0.1
        detections = simulate(straight_scenario(), d=8).detections
        nudged = [detections[0].model_copy(update={"feature": [v + 0.5 for v in detections[0].feature]})]
        later = small_config.tau_h + 2
        base = {r.frame: r for r in run_sequence(detections, params, small_config).tracks}
        changed = {r.frame: r for r in run_sequence(nudged + list(detections[1:]), params, small_config).tracks}
        assert base[later].id == changed[later].id == 0
        assert abs(base[later].x - changed[later].x) > 1e-9

    def test_detection_order_does_not_matter(self, crowd, small_params, small_config, rng):
        shuffled = [crowd.detections[i] for i in rng.permutation(len(crowd.detections))]
        assert shuffled != list(crowd.detections)
        assert run_sequence(shuffled, small_params, small_config).tracks == run_sequence(
            crowd.detections, small_params, small_config
        ).tracks

    def test_ids_are_unique_and_never_reissued(self, crowd, small_params, small_config):
        rows = run_sequence(crowd.detections, small_params, small_config).tracks
        per_frame = {}
        for r in rows:
            per_frame.setdefault(r.frame, []).append(r.id)
        assert all(len(ids) == len(set(ids)) for ids in per_frame.values())
        first_seen = {}
        for r in rows:
            first_seen.setdefault(r.id, r.frame)
        births = sorted(first_seen, key=lambda i: (first_seen[i], i))
        assert births == sorted(first_seen)

    def test_noiseless_straight_run_log(self, straight_scenario, small_params, small_config):
        result = run_sequence(simulate(straight_scenario(), d=8).detections, small_params, small_config)
        assert len(result.tracks) == 12
        for f, r in enumerate(result.tracks):
            expected = dict(
                frame=f, id=0, x=-10.0 + f, y=3.0, z=0.8, l=4.5, w=1.9, h=1.6, yaw=0.0, vx=2.0, vy=0.0,
                score=0.75, class_id=0,
            )
            assert r.model_dump() == pytest.approx(expected, abs=1e-9)
        for f, fc in enumerate(result.forecasts):
            assert (fc.frame, fc.id) == (f, 0)
            np.testing.assert_allclose(fc.movements, [(1.0, 0.0)] * small_config.tau_f, atol=1e-9)
