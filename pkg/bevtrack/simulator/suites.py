"""
Parameterized scenario families.

occlusion: agents on parallel lanes, each hidden once for 3 to 6 frames.
turning: constant-turn-rate agents with |turn rate| in [0.2, 0.5] rad/s.
crowded: 20 slow agents packed within 15 m of the origin.
handoff: agents crossing laterally past the origin through camera sectors.
"""
import logging
import math
from typing import Callable, Dict, List, Optional

import numpy as np

from bevtrack.errors import ConfigError
from bevtrack.model.scenario import AgentSpec, OcclusionWindow, ScenarioConfig, SensorSpec
from bevtrack.nn.rng import stream

logger = logging.getLogger(__name__)

OCCLUSION_MIN = 3
OCCLUSION_MAX = 6
TURN_MIN = 0.2
TURN_MAX = 0.5
LANE_SPACING = 5.0
CROWD_EXTENT = 15.0
CROWD_SPACING = 3.0


def _occlusion(rng: np.random.Generator, frames: Optional[int]) -> dict:
    frames = frames or int(rng.integers(30, 41))
    heading = float(rng.uniform(-math.pi, math.pi))
    along = np.array([math.cos(heading), math.sin(heading)])
    across = np.array([-along[1], along[0]])
    agents, windows = [], []
    for lane in range(6):
        offset = (lane - 2.5) * LANE_SPACING
        start = float(rng.uniform(-30.0, -10.0))
        x, y = start * along + offset * across
        agents.append(AgentSpec(x=float(x), y=float(y), yaw=heading, speed=float(rng.uniform(1.0, 3.5)), feature_seed=lane))
        length = int(rng.integers(OCCLUSION_MIN, OCCLUSION_MAX + 1))
        first = int(rng.integers(5, max(6, frames - length - 6)))
        windows.append(OcclusionWindow(agent=lane, start=first, end=first + length - 1))
    return {"frames": frames, "agents": agents, "sensor": SensorSpec(occlusions=windows)}


def _turning(rng: np.random.Generator, frames: Optional[int]) -> dict:
    frames = frames or int(rng.integers(30, 41))
    agents = []
    for i, (gx, gy) in enumerate([(-15.0, -10.0), (0.0, -10.0), (15.0, -10.0), (-15.0, 10.0), (0.0, 10.0), (15.0, 10.0)]):
        rate = float(rng.uniform(TURN_MIN, TURN_MAX)) * (1.0 if rng.random() < 0.5 else -1.0)
        agents.append(AgentSpec(
            x=gx + float(rng.uniform(-2.0, 2.0)),
            y=gy + float(rng.uniform(-2.0, 2.0)),
            yaw=float(rng.uniform(-math.pi, math.pi)),
            motion="constant_turn_rate",
            speed=float(rng.uniform(2.0, 4.0)),
            turn_rate=rate,
            feature_seed=i,
        ))
    return {"frames": frames, "agents": agents}


def _crowded(rng: np.random.Generator, frames: Optional[int]) -> dict:
    positions: List[np.ndarray] = []
    while len(positions) < 20:
        p = rng.uniform(-CROWD_EXTENT, CROWD_EXTENT, size=2)
        if all(np.hypot(*(p - q)) >= CROWD_SPACING for q in positions):
            positions.append(p)
    agents = [
        AgentSpec(
            x=float(p[0]), y=float(p[1]),
            yaw=float(rng.uniform(-math.pi, math.pi)),
            speed=float(rng.uniform(0.5, 2.0)),
            size=(4.5, 1.9, 1.6) if i % 4 else (0.8, 0.8, 1.7),
            class_id=0 if i % 4 else 1,
            feature_seed=i,
        )
        for i, p in enumerate(positions)
    ]
    return {"frames": frames or 30, "agents": agents, "sensor": SensorSpec(sigma_xy=0.3)}


def _handoff(rng: np.random.Generator, frames: Optional[int]) -> dict:
    agents = [
        AgentSpec(
            x=6.0 + 4.0 * i + float(rng.uniform(-1.0, 1.0)),
            y=-20.0 - float(rng.uniform(0.0, 5.0)),
            yaw=math.pi / 2.0,
            speed=float(rng.uniform(3.0, 5.0)),
            feature_seed=i,
        )
        for i in range(4)
    ]
    return {"frames": frames or 30, "agents": agents}


SUITES: Dict[str, Callable[[np.random.Generator, Optional[int]], dict]] = {
    "occlusion": _occlusion,
    "turning": _turning,
    "crowded": _crowded,
    "handoff": _handoff,
}


def scenario_suite(name: str, count: int, seed: int = 0, frames: Optional[int] = None) -> List[ScenarioConfig]:
    """
    Build `count` reproducible scenarios of one family.

    Raises:
        ConfigError: On an unknown suite name or a count below 1
    """
    if name not in SUITES:
        raise ConfigError(f"Unknown suite {name!r}; expected one of {', '.join(SUITES)}", "UNKNOWN_SUITE", {"suite": name})
    if count < 1:
        raise ConfigError(f"Suite count must be at least 1, got {count}", "CONFIG_INVALID", {"count": count})
    scenarios = []
    for i in range(count):
        rng = stream(seed, f"suite.{name}.{i}")
        spec = SUITES[name](rng, frames)
        scenarios.append(ScenarioConfig(name=f"{name}-{i:03d}", seed=int(rng.integers(2 ** 31)), **spec))
    logger.info(f"Generated {count} {name} scenarios with seed {seed}")
    return scenarios
