import numpy as np
import pytest

from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Box3D, Query
from bevtrack.model.scenario import AgentSpec, OcclusionWindow, ScenarioConfig, SensorSpec
from bevtrack.nn.params import init_params

NOISELESS = SensorSpec(
    sigma_xy=0.0, sigma_z=0.0, sigma_v=0.0, sigma_yaw=0.0, sigma_feature=0.0,
    score_spread=0.0, dropout=0.0, fp_rate=0.0,
)


@pytest.fixture
def small_config():
    return TrackerConfig(d=8, n_heads=2, n_layers=1)


@pytest.fixture
def small_params(small_config):
    return init_params(small_config, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_box():
    def _make(x=0.0, y=0.0, score=0.9, velocity=(0.0, 0.0), class_id=0, yaw=0.0):
        return Box3D(center=(x, y, 0.8), size=(4.5, 1.9, 1.6), yaw=yaw, velocity=velocity, score=score, class_id=class_id)
    return _make


@pytest.fixture
def make_query():
    def _make(x=0.0, y=0.0, timestamp=0, d=8, fill=0.1, track_ref=None):
        return Query(track_ref=track_ref, feature=tuple([fill] * d), center=(x, y, 0.8), timestamp=timestamp)
    return _make


@pytest.fixture
def straight_scenario():
    """One agent driving +x at 2 m/s (1 m per frame), seen every frame without noise."""
    def _make(frames=12, occlusion=None):
        sensor = NOISELESS
        if occlusion is not None:
            start, end = occlusion
            sensor = NOISELESS.model_copy(update={"occlusions": [OcclusionWindow(agent=0, start=start, end=end)]})
        return ScenarioConfig(
            name="straight",
            frames=frames,
            agents=[AgentSpec(x=-10.0, y=3.0, yaw=0.0, speed=2.0)],
            sensor=sensor,
            seed=5,
        )
    return _make
