import math

import numpy as np
import pytest

from bevtrack.errors import ConfigError
from bevtrack.model.scenario import AgentSpec, ScenarioConfig, SensorSpec, default_camera_ring
from bevtrack.simulator.suites import OCCLUSION_MAX, OCCLUSION_MIN, TURN_MAX, TURN_MIN, scenario_suite
from bevtrack.simulator.world import agent_states, camera_of, simulate

from conftest import NOISELESS


class TestKinematics:
    def test_constant_velocity(self):
        states = agent_states(AgentSpec(x=1.0, y=2.0, yaw=math.pi / 2, speed=2.0), 3, 0.5)
        assert states[2][:2] == pytest.approx((1.0, 4.0))
        assert states[2][3:] == pytest.approx((0.0, 2.0), abs=1e-12)

    def test_constant_turn_rate_stays_on_circle(self):
        agent = AgentSpec(x=0.0, y=0.0, yaw=0.0, motion="constant_turn_rate", speed=2.0, turn_rate=0.5)
        radius = agent.speed / agent.turn_rate
        for x, y, yaw, vx, vy in agent_states(agent, 20, 0.5):
            assert math.hypot(x, y - radius) == pytest.approx(radius)
            assert math.hypot(vx, vy) == pytest.approx(2.0)

    def test_waypoints_are_reached(self):
        agent = AgentSpec(x=0.0, y=0.0, motion="waypoint", speed=2.0, waypoints=[(2.0, 0.0), (2.0, 2.0)])
        states = agent_states(agent, 5, 0.5)
        xy = [c for s in states for c in s[:2]]
        assert xy == pytest.approx([0, 0, 1, 0, 2, 0, 2, 1, 2, 2])
        assert states[-1][3:] == (0.0, 0.0)


class TestSimulate:
    def test_same_seed_same_logs(self):
        config = scenario_suite("crowded", 1, seed=3)[0]
        first, second = simulate(config, d=8), simulate(config, d=8)
        assert first.gt_log == second.gt_log
        assert first.detections_log == second.detections_log

    def test_seed_override_changes_noise(self):
        config = scenario_suite("crowded", 1, seed=3)[0]
        assert simulate(config, d=8, seed=1).detections_log != simulate(config, d=8, seed=2).detections_log

    def test_noiseless_detections_match_ground_truth(self, straight_scenario):
        sim = simulate(straight_scenario(), d=8)
        assert len(sim.detections) == len(sim.gt) == 12
        for det, gt in zip(sim.detections, sim.gt):
            assert (det.frame, det.x, det.y, det.vx) == (gt.frame, gt.x, gt.y, gt.vx)
            assert det.score == 0.75
            assert np.linalg.norm(det.feature) == pytest.approx(1.0)

    def test_occluded_frames_have_no_detection(self, straight_scenario):
        sim = simulate(straight_scenario(occlusion=(3, 5)), d=8)
        assert sorted({d.frame for d in sim.detections}) == [0, 1, 2, 6, 7, 8, 9, 10, 11]
        assert len(sim.gt) == 12

    def test_clutter_rate(self):
        config = ScenarioConfig(frames=200, agents=[], sensor=SensorSpec(fp_rate=2.0), seed=1)
        sim = simulate(config, d=4)
        assert sim.gt == []
        assert len(sim.detections) / 200 == pytest.approx(2.0, rel=0.2)
        assert all(d.score <= 0.8 for d in sim.detections)

    def test_agents_outside_range_are_not_logged(self):
        config = ScenarioConfig(frames=3, agents=[AgentSpec(x=60.0, y=0.0)], sensor=NOISELESS)
        sim = simulate(config, d=4)
        assert sim.gt == [] and sim.detections == []

    def test_handoffs_record_sector_changes(self):
        config = ScenarioConfig(
            frames=12, agents=[AgentSpec(x=10.0, y=-10.0, yaw=math.pi / 2, speed=4.0)], sensor=NOISELESS
        )
        sim = simulate(config, d=4)
        assert [(h.from_camera, h.to_camera) for h in sim.handoffs] == [("front_right", "front"), ("front", "front_left")]
        assert all(h.agent == 0 for h in sim.handoffs)


def test_camera_ring_covers_every_azimuth():
    cameras = default_camera_ring()
    for deg in range(-180, 180, 7):
        rad = math.radians(deg)
        assert camera_of(math.cos(rad), math.sin(rad), cameras) is not None
    assert camera_of(1.0, 0.0, cameras) == "front"
    assert camera_of(-1.0, 0.0, cameras) == "back"


class TestSuites:
    def test_occlusion_windows(self):
        for scenario in scenario_suite("occlusion", 5, seed=0):
            assert len(scenario.agents) == 6
            for window in scenario.sensor.occlusions:
                assert OCCLUSION_MIN <= window.length <= OCCLUSION_MAX
                assert window.end < scenario.frames

    def test_turn_rates(self):
        for scenario in scenario_suite("turning", 3, seed=0):
            for agent in scenario.agents:
                assert agent.motion == "constant_turn_rate"
                assert TURN_MIN <= abs(agent.turn_rate) <= TURN_MAX

    def test_crowded_has_two_classes(self):
        scenario = scenario_suite("crowded", 1, seed=0)[0]
        assert len(scenario.agents) == 20
        assert {a.class_id for a in scenario.agents} == {0, 1}

    def test_handoff_agents_change_cameras(self):
        scenario = scenario_suite("handoff", 1, seed=0)[0]
        assert simulate(scenario, d=4).handoffs

    def test_names_and_reproducibility(self):
        first = scenario_suite("turning", 2, seed=9)
        assert [s.name for s in first] == ["turning-000", "turning-001"]
        assert first == scenario_suite("turning", 2, seed=9)
        assert first != scenario_suite("turning", 2, seed=10)

    def test_frame_override(self):
        assert all(s.frames == 12 for s in scenario_suite("occlusion", 3, frames=12))

    def test_unknown_suite(self):
        with pytest.raises(ConfigError) as exc:
            scenario_suite("highway", 1)
        assert exc.value.error_code == "UNKNOWN_SUITE"

    def test_count_must_be_positive(self):
        with pytest.raises(ConfigError):
            scenario_suite("turning", 0)
