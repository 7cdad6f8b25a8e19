"""
Geometric stand-in for the learned decoder: it locks propagated track
queries onto nearby detections and proposes births from the rest.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

import numpy as np

from bevtrack.baselines.association import associate
from bevtrack.errors import ShapeError
from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Box3D, Query
from bevtrack.model.records import DetectionRecord, FrameDetections
from bevtrack.model.tracking import TrackerState

logger = logging.getLogger(__name__)


@dataclass
class StubOutput:
    """Decoder-stub queries and boxes for one frame, keyed by track id."""
    tracks: Dict[int, Tuple[Query, Box3D]] = field(default_factory=dict)
    matched: Set[int] = field(default_factory=set)
    births: List[Tuple[Query, Box3D]] = field(default_factory=list)


def _detection_queries(detections: FrameDetections, config: TrackerConfig) -> List[DetectionRecord]:
    """The frame's top detection_queries detections by descending score, stable on ties."""
    for det in detections.detections:
        if len(det.feature) != config.d:
            raise ShapeError(
                f"Detection feature has length {len(det.feature)}, tracker expects d={config.d}",
                "DIM_MISMATCH",
                {"frame": detections.frame, "feature_length": len(det.feature), "d": config.d}
            )
    ranked = sorted(detections.detections, key=lambda det: -det.score)
    if len(ranked) > config.detection_queries:
        logger.debug(f"Frame {detections.frame}: keeping {config.detection_queries} of {len(ranked)} detections")
    return ranked[:config.detection_queries]


def decode_stub(state: TrackerState, detections: FrameDetections, config: TrackerConfig) -> StubOutput:
    """
    Match propagated track queries to detections and propose births.

    Tracks and detections are paired by minimum total center distance,
    pairs at or beyond the gate radius excluded. A matched track's query
    blends its propagated feature with the detection feature and moves to
    the detection center; its stub box is the detection box. An unmatched
    track keeps its propagated query and box with score 0. Unmatched
    detections scoring above theta_init become births, highest score first.

    Raises:
        ShapeError: If a detection feature does not have length d
    """
    frame = detections.frame
    beta = config.feature_blend
    out = StubOutput()
    tracks = list(state.tracks)
    dets = _detection_queries(detections, config)

    centers = np.array([t.query.center[:2] for t in tracks]).reshape(-1, 2)
    points = np.array([(det.x, det.y) for det in dets]).reshape(-1, 2)
    cost = np.hypot(centers[:, None, 0] - points[None, :, 0], centers[:, None, 1] - points[None, :, 1])
    claimed = set()
    for row, col in associate(cost, config.gate_radius):
        track, det = tracks[row], dets[col]
        box = det.to_box()
        feature = (1.0 - beta) * track.query.feature_array + beta * np.asarray(det.feature)
        query = Query(track_ref=track.id, feature=tuple(float(v) for v in feature), center=box.center, timestamp=frame)
        out.tracks[track.id] = (query, box)
        out.matched.add(track.id)
        claimed.add(col)

    for col, det in enumerate(dets):
        if col not in claimed and det.score > config.theta_init:
            box = det.to_box()
            query = Query(feature=tuple(float(v) for v in det.feature), center=box.center, timestamp=frame)
            out.births.append((query, box))

    for track in tracks:
        if track.id not in out.matched:
            query = track.query.model_copy(update={"timestamp": frame})
            out.tracks[track.id] = (query, track.box.model_copy(update={"score": 0.0}))

    logger.debug(f"Frame {frame}: {len(out.matched)} matched, {len(tracks) - len(out.matched)} unmatched, {len(out.births)} births")
    return out
