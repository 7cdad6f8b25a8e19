from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from bevtrack.model.geometry import Box3D, Vec2


class _BoxRow(BaseModel):
    """Box columns shared by every JSON-lines log."""
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    frame: int = Field(ge=0)
    x: float
    y: float
    z: float
    l: float
    w: float
    h: float
    yaw: float
    vx: float
    vy: float
    score: float = Field(ge=0.0, le=1.0)
    class_id: int = Field(alias="class")

    def to_box(self) -> Box3D:
        return Box3D(
            center=(self.x, self.y, self.z),
            size=(self.l, self.w, self.h),
            yaw=self.yaw,
            velocity=(self.vx, self.vy),
            score=self.score,
            class_id=self.class_id,
        )

    @staticmethod
    def _box_columns(box: Box3D) -> dict:
        return {
            "x": box.center[0], "y": box.center[1], "z": box.center[2],
            "l": box.size[0], "w": box.size[1], "h": box.size[2],
            "yaw": box.yaw, "vx": box.velocity[0], "vy": box.velocity[1],
            "score": box.score, "class": box.class_id,
        }


class DetectionRecord(_BoxRow):
    """
    One row of a detections log: a box plus its appearance feature.
    """
    feature: List[float]

    @classmethod
    def from_box(cls, frame: int, box: Box3D, feature) -> "DetectionRecord":
        return cls(frame=frame, feature=[float(v) for v in feature], **cls._box_columns(box))


class TrackRecord(_BoxRow):
    """
    One row of a track log (tracker output or ground truth).
    """
    id: int

    @classmethod
    def from_box(cls, frame: int, track_id: int, box: Box3D) -> "TrackRecord":
        return cls(frame=frame, id=track_id, **cls._box_columns(box))


class ForecastRecord(BaseModel):
    """Forecast emitted by a track at `frame`, anchored at its center (x, y)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    frame: int = Field(ge=0)
    id: int
    x: float
    y: float
    movements: List[Vec2]


class FrameDetections(BaseModel):
    """Detections of one frame, in log order."""
    model_config = ConfigDict(frozen=True)

    frame: int = Field(ge=0)
    detections: Tuple[DetectionRecord, ...] = ()


class HandoffRecord(BaseModel):
    """An agent crossing from one camera sector into another."""
    model_config = ConfigDict(frozen=True)

    frame: int
    agent: int
    from_camera: Optional[str]
    to_camera: Optional[str]
