from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from bevtrack.model.geometry import Vec3

MotionModel = Literal["constant_velocity", "constant_turn_rate", "waypoint"]


class AgentSpec(BaseModel):
    """
    One simulated agent: initial pose, motion model, size, class and latent seed.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    x: float
    y: float
    yaw: float = 0.0
    motion: MotionModel = "constant_velocity"
    speed: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    turn_rate: float = Field(default=0.0, allow_inf_nan=False)
    waypoints: List[Tuple[float, float]] = []
    size: Vec3 = (4.5, 1.9, 1.6)
    class_id: int = Field(default=0, ge=0)
    feature_seed: int = 0

    @model_validator(mode="after")
    def _check_motion(self) -> Self:
        if self.motion == "waypoint" and not self.waypoints:
            raise ValueError("waypoint agents need at least one waypoint")
        if any(s <= 0.0 for s in self.size):
            raise ValueError("size components must be positive")
        return self


class OcclusionWindow(BaseModel):
    """Frames [start, end] (inclusive) during which `agent` produces no detection."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    agent: int = Field(ge=0)
    start: int = Field(ge=0)
    end: int = Field(ge=0)

    @model_validator(mode="after")
    def _ordered(self) -> Self:
        if self.end < self.start:
            raise ValueError("occlusion window end precedes start")
        return self

    @property
    def length(self) -> int:
        return self.end - self.start + 1


class CameraSector(BaseModel):
    """Azimuth sector [start_deg, end_deg) of one camera in the ring."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    start_deg: float
    end_deg: float


def default_camera_ring() -> List[CameraSector]:
    names = ["front", "front_left", "back_left", "back", "back_right", "front_right"]
    return [
        CameraSector(name=name, start_deg=-30.0 + 60.0 * k, end_deg=30.0 + 60.0 * k)
        for k, name in enumerate(names)
    ]


class SensorSpec(BaseModel):
    """
    Noise, dropout, clutter and occlusion model of the simulated sensor.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_xy: float = Field(default=0.3, ge=0.0)
    sigma_z: float = Field(default=0.1, ge=0.0)
    sigma_v: float = Field(default=0.5, ge=0.0)
    sigma_yaw: float = Field(default=0.05, ge=0.0)
    sigma_feature: float = Field(default=0.1, ge=0.0)
    score_mean: float = Field(default=0.75, ge=0.0, le=1.0)
    score_spread: float = Field(default=0.1, ge=0.0)
    fp_score_mean: float = Field(default=0.3, ge=0.0, le=1.0)
    fp_score_spread: float = Field(default=0.1, ge=0.0)
    dropout: float = Field(default=0.05, ge=0.0, le=1.0)
    fp_rate: float = Field(default=0.5, ge=0.0)
    fp_extent: float = Field(default=40.0, gt=0.0)
    range_xy: float = Field(default=51.2, gt=0.0)
    occlusions: List[OcclusionWindow] = []
    cameras: List[CameraSector] = Field(default_factory=default_camera_ring)


class ScenarioConfig(BaseModel):
    """
    A complete simulated sequence.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    frames: int = Field(ge=1)
    period_s: float = Field(default=0.5, gt=0.0)
    agents: List[AgentSpec]
    sensor: SensorSpec = SensorSpec()
    seed: int = 0

    @model_validator(mode="after")
    def _check_occlusions(self) -> Self:
        for window in self.sensor.occlusions:
            if window.agent >= len(self.agents):
                raise ValueError(f"occlusion references unknown agent {window.agent}")
        return self

    def occluded(self, agent: int, frame: int) -> bool:
        return any(w.agent == agent and w.start <= frame <= w.end for w in self.sensor.occlusions)

    def max_occlusion(self) -> Optional[int]:
        lengths = [w.length for w in self.sensor.occlusions]
        return max(lengths) if lengths else None
