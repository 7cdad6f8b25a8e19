import logging
from dataclasses import replace
from typing import List, Sequence

import numpy as np

from bevtrack.baselines.association import associate
from bevtrack.baselines.kalman import KalmanTrack, kalman_predict, kalman_update
from bevtrack.core.jsonl import group_by_frame
from bevtrack.model.config import BaselineConfig
from bevtrack.model.records import DetectionRecord, TrackRecord
from bevtrack.tracker.engine import SequenceResult

logger = logging.getLogger(__name__)


def _cost(tracks: List[KalmanTrack], detections: List[DetectionRecord]) -> np.ndarray:
    cost = np.full((len(tracks), len(detections)), np.inf)
    for i, track in enumerate(tracks):
        for j, det in enumerate(detections):
            if det.class_id == track.class_id:
                cost[i, j] = float(np.hypot(track.x[0] - det.x, track.x[1] - det.y))
    return cost


def run_tbd(
    detections: Sequence[DetectionRecord],
    config: BaselineConfig,
    last_frame: int = -1,
) -> SequenceResult:
    """
    Kalman tracking-by-detection over one detection log.

    Per frame: drop detections below score_thresh, predict every track,
    associate on ground-plane center distance within the gate, update the
    matched tracks, age the rest, start a track from every unmatched
    detection and drop tracks missed more than max_age frames in a row.
    A track is reported once it has min_hits hits, on frames where it was
    matched.
    """
    tracks: List[KalmanTrack] = []
    next_id = 0
    result = SequenceResult()
    for frame in group_by_frame(detections, last_frame):
        dets = [d for d in frame.detections if d.score >= config.score_thresh]
        tracks = [kalman_predict(t, config.frame_period, config.process_noise) for t in tracks]
        pairs = associate(_cost(tracks, dets), config.gate, config.mode)

        matched_tracks = {r: c for r, c in pairs}
        matched_dets = set(matched_tracks.values())
        survivors: List[KalmanTrack] = []
        for i, track in enumerate(tracks):
            if i in matched_tracks:
                track = kalman_update(track, dets[matched_tracks[i]].to_box(), config.measurement_noise)
                survivors.append(replace(track, age=track.age + 1))
            elif track.misses + 1 <= config.max_age:
                survivors.append(replace(track, age=track.age + 1, misses=track.misses + 1))
            else:
                logger.debug(f"TBD track {track.id} dropped at frame {frame.frame}")

        for j, det in enumerate(dets):
            if j not in matched_dets:
                survivors.append(KalmanTrack.from_box(next_id, det.to_box(), config.measurement_noise))
                next_id += 1

        tracks = sorted(survivors, key=lambda t: t.id)
        for track in tracks:
            if track.hits >= config.min_hits and track.misses == 0:
                result.tracks.append(TrackRecord.from_box(frame.frame, track.id, track.to_box()))
    logger.info(f"TBD ({config.mode}) produced {len(result.tracks)} boxes, {next_id} track ids")
    return result
