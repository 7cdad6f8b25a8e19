import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from bevtrack.core.geometry import normalize_yaw
from bevtrack.core.jsonl import dump_records
from bevtrack.model.geometry import Box3D
from bevtrack.model.records import DetectionRecord, HandoffRecord, TrackRecord
from bevtrack.model.scenario import AgentSpec, CameraSector, ScenarioConfig
from bevtrack.nn.rng import stream

logger = logging.getLogger(__name__)

FP_SIZE = (4.5, 1.9, 1.6)
MIN_SCORE = 0.01
TURN_EPS = 1e-9

# x, y, yaw, vx, vy
AgentState = Tuple[float, float, float, float, float]


@dataclass
class SimulationResult:
    gt: List[TrackRecord] = field(default_factory=list)
    detections: List[DetectionRecord] = field(default_factory=list)
    handoffs: List[HandoffRecord] = field(default_factory=list)

    @property
    def gt_log(self) -> str:
        return dump_records(self.gt)

    @property
    def detections_log(self) -> str:
        return dump_records(self.detections)


def _waypoint_states(agent: AgentSpec, frames: int, period: float) -> List[AgentState]:
    states = []
    x, y, yaw = agent.x, agent.y, agent.yaw
    targets = list(agent.waypoints)
    for _ in range(frames):
        while targets and math.hypot(targets[0][0] - x, targets[0][1] - y) < 1e-9:
            targets.pop(0)
        if targets and agent.speed > 0.0:
            yaw = math.atan2(targets[0][1] - y, targets[0][0] - x)
            states.append((x, y, yaw, agent.speed * math.cos(yaw), agent.speed * math.sin(yaw)))
        else:
            states.append((x, y, yaw, 0.0, 0.0))
        budget = agent.speed * period
        while targets and budget > 0.0:
            tx, ty = targets[0]
            gap = math.hypot(tx - x, ty - y)
            if gap <= budget:
                x, y, budget = tx, ty, budget - gap
                targets.pop(0)
            else:
                x += budget * (tx - x) / gap
                y += budget * (ty - y) / gap
                budget = 0.0
    return states


def agent_states(agent: AgentSpec, frames: int, period: float) -> List[AgentState]:
    """
    Closed-form (constant velocity, constant turn rate) or stepped
    (waypoint) kinematics of one agent at every frame.
    """
    if agent.motion == "waypoint":
        return _waypoint_states(agent, frames, period)
    states = []
    v, w = agent.speed, agent.turn_rate
    for k in range(frames):
        t = k * period
        if agent.motion == "constant_velocity" or abs(w) < TURN_EPS:
            yaw = agent.yaw
            x = agent.x + v * t * math.cos(yaw)
            y = agent.y + v * t * math.sin(yaw)
        else:
            yaw = agent.yaw + w * t
            x = agent.x + v / w * (math.sin(yaw) - math.sin(agent.yaw))
            y = agent.y + v / w * (math.cos(agent.yaw) - math.cos(yaw))
        states.append((x, y, yaw, v * math.cos(yaw), v * math.sin(yaw)))
    return states


def _latent(seed: int, index: int, agent: AgentSpec, d: int) -> np.ndarray:
    vec = stream(seed, f"latent.{index}.{agent.feature_seed}").standard_normal(d)
    return vec / np.linalg.norm(vec)


def camera_of(x: float, y: float, cameras: List[CameraSector]) -> Optional[str]:
    azimuth = math.degrees(math.atan2(y, x))
    for camera in cameras:
        for turn in (-360.0, 0.0, 360.0):
            if camera.start_deg <= azimuth + turn < camera.end_deg:
                return camera.name
    return None


def simulate(config: ScenarioConfig, d: int = 32, seed: Optional[int] = None) -> SimulationResult:
    """
    Generate the ground-truth log, the detection log and camera hand-offs.

    Each visible agent emits at most one detection per frame; occluded or
    dropped agents emit none; false positives are uniform clutter. Detection
    rows carry no agent ids and are shuffled within each frame. Output is a
    pure function of (config, d, seed).
    """
    seed = config.seed if seed is None else seed
    sensor = config.sensor
    limit = sensor.range_xy
    trajectories = [agent_states(a, config.frames, config.period_s) for a in config.agents]
    latents = [_latent(seed, i, a, d) for i, a in enumerate(config.agents)]
    result = SimulationResult()
    last_camera: List[Optional[str]] = [None] * len(config.agents)

    for k in range(config.frames):
        rng = stream(seed, f"sensor.frame.{k}")
        frame_dets: List[DetectionRecord] = []
        for i, agent in enumerate(config.agents):
            x, y, yaw, vx, vy = trajectories[i][k]
            if abs(x) > limit or abs(y) > limit:
                continue
            h = agent.size[2]
            gt_box = Box3D(center=(x, y, h / 2.0), size=agent.size, yaw=yaw, velocity=(vx, vy), score=1.0, class_id=agent.class_id)
            result.gt.append(TrackRecord.from_box(k, i, gt_box))

            camera = camera_of(x, y, sensor.cameras)
            if last_camera[i] is not None and camera != last_camera[i]:
                result.handoffs.append(HandoffRecord(frame=k, agent=i, from_camera=last_camera[i], to_camera=camera))
            last_camera[i] = camera

            noise = rng.standard_normal(7)
            dropped = rng.random() < sensor.dropout
            feature = latents[i] + sensor.sigma_feature * rng.standard_normal(d)
            if dropped or config.occluded(i, k):
                continue
            dx, dy = x + sensor.sigma_xy * noise[0], y + sensor.sigma_xy * noise[1]
            if abs(dx) > limit or abs(dy) > limit:
                continue
            box = Box3D(
                center=(dx, dy, h / 2.0 + sensor.sigma_z * noise[2]),
                size=agent.size,
                yaw=normalize_yaw(yaw + sensor.sigma_yaw * noise[3]),
                velocity=(vx + sensor.sigma_v * noise[4], vy + sensor.sigma_v * noise[5]),
                score=float(np.clip(sensor.score_mean + sensor.score_spread * noise[6], MIN_SCORE, 1.0)),
                class_id=agent.class_id,
            )
            frame_dets.append(DetectionRecord.from_box(k, box, feature))

        for _ in range(int(rng.poisson(sensor.fp_rate))):
            cx, cy = rng.uniform(-sensor.fp_extent, sensor.fp_extent, size=2)
            clutter = rng.standard_normal(d)
            box = Box3D(
                center=(float(cx), float(cy), FP_SIZE[2] / 2.0),
                size=FP_SIZE,
                yaw=float(rng.uniform(-math.pi, math.pi)),
                velocity=tuple(float(v) for v in rng.standard_normal(2)),
                score=float(np.clip(sensor.fp_score_mean + sensor.fp_score_spread * rng.standard_normal(), MIN_SCORE, 1.0)),
            )
            frame_dets.append(DetectionRecord.from_box(k, box, clutter / np.linalg.norm(clutter)))

        result.detections.extend(frame_dets[j] for j in rng.permutation(len(frame_dets)))

    logger.info(
        f"Simulated {config.name}: {config.frames} frames, {len(result.gt)} gt boxes, "
        f"{len(result.detections)} detections, {len(result.handoffs)} hand-offs"
    )
    return result
