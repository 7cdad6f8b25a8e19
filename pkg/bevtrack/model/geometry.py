import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

Vec2 = Tuple[float, float]
Vec3 = Tuple[float, float, float]


def _check_finite(values, name: str):
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"{name} must be finite, got {values}")
    return values


class Box3D(BaseModel):
    """
    Oriented 3D box in the global frame.
    """
    model_config = ConfigDict(frozen=True)

    center: Vec3
    size: Vec3
    yaw: float = 0.0
    velocity: Vec2 = (0.0, 0.0)
    score: float = Field(default=1.0, ge=0.0, le=1.0)
    class_id: int = 0

    @field_validator("center")
    @classmethod
    def _finite_center(cls, v: Vec3) -> Vec3:
        return _check_finite(v, "center")

    @field_validator("size")
    @classmethod
    def _positive_size(cls, v: Vec3) -> Vec3:
        if not all(math.isfinite(s) and s > 0.0 for s in v):
            raise ValueError(f"size components must be positive, got {v}")
        return v

    @field_validator("yaw")
    @classmethod
    def _normalized_yaw(cls, v: float) -> float:
        from bevtrack.core.geometry import normalize_yaw
        return normalize_yaw(v)

    @field_validator("velocity")
    @classmethod
    def _finite_velocity(cls, v: Vec2) -> Vec2:
        return _check_finite(v, "velocity")

    @property
    def xy(self) -> np.ndarray:
        return np.array(self.center[:2], dtype=np.float64)


class Query(BaseModel):
    """
    A latent feature plus a 3D center: the carrier of one object's identity.
    """
    model_config = ConfigDict(frozen=True)

    track_ref: Optional[int] = None
    feature: Tuple[float, ...]
    center: Vec3
    timestamp: int = Field(ge=0)

    @field_validator("center")
    @classmethod
    def _finite_center(cls, v: Vec3) -> Vec3:
        return _check_finite(v, "center")

    @field_validator("feature")
    @classmethod
    def _finite_feature(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        return _check_finite(v, "feature")

    @property
    def feature_array(self) -> np.ndarray:
        return np.asarray(self.feature, dtype=np.float64)

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)


class TrajectoryForecast(BaseModel):
    """Per-frame XY movements predicted from `origin_frame` onwards."""
    model_config = ConfigDict(frozen=True)

    origin_frame: int
    movements: Tuple[Vec2, ...]

    @field_validator("movements")
    @classmethod
    def _finite_steps(cls, v: Tuple[Vec2, ...]) -> Tuple[Vec2, ...]:
        for step in v:
            _check_finite(step, "movement")
        return v

    @property
    def horizon(self) -> int:
        return len(self.movements)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.movements, dtype=np.float64).reshape(-1, 2)

    @classmethod
    def from_array(cls, origin_frame: int, movements: np.ndarray) -> "TrajectoryForecast":
        return cls(
            origin_frame=origin_frame,
            movements=tuple((float(dx), float(dy)) for dx, dy in np.asarray(movements).reshape(-1, 2)),
        )
