from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from bevtrack.model.geometry import Box3D, Query, TrajectoryForecast


class QueryQueue(BaseModel):
    """
    Ring buffer of one track's last `capacity` queries.
    """
    model_config = ConfigDict(frozen=True)

    capacity: int = Field(ge=1)
    entries: Tuple[Query, ...] = ()

    @model_validator(mode="after")
    def _check_order(self) -> Self:
        if len(self.entries) > self.capacity:
            raise ValueError("queue holds more entries than its capacity")
        stamps = [q.timestamp for q in self.entries]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("queue timestamps must be strictly increasing")
        return self

    def push(self, query: Query) -> "QueryQueue":
        entries = (self.entries + (query,))[-self.capacity:]
        return QueryQueue(capacity=self.capacity, entries=entries)

    def slots(self, frame: int) -> Tuple[List[Optional[Query]], List[bool]]:
        """
        Align entries to the offsets -capacity..-1 relative to `frame`.

        Returns:
            (slot queries with None for empty slots, presence mask)
        """
        by_stamp = {q.timestamp: q for q in self.entries}
        slots = [by_stamp.get(frame + offset) for offset in range(-self.capacity, 0)]
        return slots, [q is not None for q in slots]


class TrackState(BaseModel):
    """
    Life-cycle record of one track between two frames.

    `query`, `forecast` and `box` describe the track propagated to the next
    frame; `box.score` is the last confident score.
    """
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    active: bool = True
    extension_count: int = Field(default=0, ge=0)
    last_confident_frame: int
    query: Query
    forecast: TrajectoryForecast
    box: Box3D


class Terminated(BaseModel):
    """Result of an extension step that ends a track."""
    model_config = ConfigDict(frozen=True)

    id: int
    frame: int


class TrackerState(BaseModel):
    """
    Per-sequence tracker state: active tracks, their queues and id bookkeeping.
    """
    model_config = ConfigDict(frozen=True)

    tracks: Tuple[TrackState, ...] = ()
    queues: Dict[int, QueryQueue] = {}
    next_id: int = 0
    frame: int = -1

    @model_validator(mode="after")
    def _queues_match_tracks(self) -> Self:
        ids = {t.id for t in self.tracks}
        if not set(self.queues).issubset(ids):
            raise ValueError("queue keys must be active track ids")
        return self
