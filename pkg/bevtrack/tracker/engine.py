"""
Frame loop of the query tracker: decode, past reasoning, future reasoning,
life-cycle management and output selection.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from bevtrack.core.jsonl import dump_records, group_by_frame
from bevtrack.errors import FrameOrderError
from bevtrack.future.extension import extension_step, propagate_track
from bevtrack.future.motion import MotionInputs, constant_velocity_forecast, motion_forward, motion_inputs
from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Box3D, Query, TrajectoryForecast
from bevtrack.model.records import DetectionRecord, ForecastRecord, FrameDetections, TrackRecord
from bevtrack.model.tracking import QueryQueue, Terminated, TrackerState, TrackState
from bevtrack.nn.flops import FlopCounter
from bevtrack.nn.params import check_params
from bevtrack.past.reasoning import cross_frame_refine, cross_object_refine, refine_track
from bevtrack.tracker.decoder_stub import decode_stub

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    state: TrackerState
    boxes: List[Tuple[int, Box3D]]
    forecasts: List[ForecastRecord] = field(default_factory=list)
    births: List[int] = field(default_factory=list)
    terminated: List[int] = field(default_factory=list)
    # training taps: motion-head inputs of adopted tracks, refinement-head inputs of all tracks
    motion_inputs: Dict[int, MotionInputs] = field(default_factory=dict)
    refine_inputs: Dict[int, Tuple[Query, Box3D]] = field(default_factory=dict)


@dataclass
class SequenceResult:
    """Track log (and forecast log) of one sequence."""
    tracks: List[TrackRecord] = field(default_factory=list)
    forecasts: List[ForecastRecord] = field(default_factory=list)

    @property
    def track_log(self) -> str:
        return dump_records(self.tracks)

    @property
    def forecast_log(self) -> str:
        return dump_records(self.forecasts)


def _forecast(
    query: Query, box: Box3D, queue: QueryQueue, params, config: TrackerConfig, counter
) -> Tuple[TrajectoryForecast, MotionInputs]:
    inputs = motion_inputs(queue, query, config, box.velocity)
    if config.propagation == "velocity":
        return constant_velocity_forecast(query.timestamp, box.velocity, config), inputs
    movements, _ = motion_forward(inputs, params, config, counter)
    return TrajectoryForecast.from_array(query.timestamp, movements), inputs


def _forecast_record(frame: int, track_id: int, box: Box3D, forecast: TrajectoryForecast) -> ForecastRecord:
    return ForecastRecord(frame=frame, id=track_id, x=box.center[0], y=box.center[1], movements=list(forecast.movements))


def _catch_up(state: TrackerState, frame: int) -> TrackerState:
    """Carry tracks across skipped frames along their forecasts."""
    tracks = list(state.tracks)
    for _ in range(frame - state.frame - 1):
        tracks = [propagate_track(t) for t in tracks]
    return state.model_copy(update={"tracks": tuple(tracks)})


def select_outputs(boxes: List[Tuple[int, Box3D]], config: TrackerConfig) -> List[Tuple[int, Box3D]]:
    """Keep boxes scoring at least theta_out, at most max_output by score, ordered by id."""
    kept = [(i, b) for i, b in boxes if b.score >= config.theta_out]
    kept.sort(key=lambda item: (-item[1].score, item[0]))
    return sorted(kept[:config.max_output], key=lambda item: item[0])


def step(
    state: TrackerState,
    detections: FrameDetections,
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    counter: Optional[FlopCounter] = None,
) -> StepResult:
    """
    Advance the tracker by one frame.

    Raises:
        FrameOrderError: If the frame does not follow the previous one
    """
    frame = detections.frame
    if frame <= state.frame:
        raise FrameOrderError(
            f"Frame {frame} does not follow frame {state.frame}",
            "FRAME_OUT_OF_ORDER",
            {"frame": frame, "previous": state.frame}
        )
    if state.frame >= 0 and frame > state.frame + 1:
        logger.warning(f"Frames {state.frame + 1}..{frame - 1} missing; tracks carried along their forecasts")
        state = _catch_up(state, frame)

    stub = decode_stub(state, detections, config)
    tracks = sorted(state.tracks, key=lambda t: t.id)
    queues = dict(state.queues)
    empty = QueryQueue(capacity=config.tau_h)

    refined_queries = [cross_frame_refine(queues.get(t.id, empty), stub.tracks[t.id][0], params, config, counter) for t in tracks]
    refined_queries = cross_object_refine(refined_queries, params, config, counter)

    result = StepResult(state=state, boxes=[])
    next_tracks: List[TrackState] = []
    for track, query in zip(tracks, refined_queries):
        queue = queues.get(track.id, empty)
        result.refine_inputs[track.id] = (query, stub.tracks[track.id][1])
        box, _ = refine_track(query, stub.tracks[track.id][1], params, config, counter)
        query = query.model_copy(update={"center": box.center})
        forecast, inputs = _forecast(query, box, queue, params, config, counter)
        outcome = extension_step(track, (query, box, forecast), config)
        if isinstance(outcome, Terminated):
            queues.pop(track.id, None)
            result.terminated.append(track.id)
            continue
        next_tracks.append(outcome)
        if outcome.extension_count == 0:
            queues[track.id] = queue.push(query)
            result.boxes.append((track.id, box))
            result.forecasts.append(_forecast_record(frame, track.id, box, forecast))
            result.motion_inputs[track.id] = inputs
        else:
            queues[track.id] = queue.push(track.query)
            decayed = track.box.score * config.score_decay ** outcome.extension_count
            result.boxes.append((track.id, track.box.model_copy(update={"score": max(config.theta_out, decayed)})))

    next_id = state.next_id
    for query, box in stub.births:
        track_id = next_id
        next_id += 1
        query = query.model_copy(update={"track_ref": track_id})
        forecast, inputs = _forecast(query, box, empty, params, config, counter)
        result.motion_inputs[track_id] = inputs
        born = TrackState(id=track_id, last_confident_frame=frame, query=query, forecast=forecast, box=box)
        next_tracks.append(propagate_track(born))
        queues[track_id] = empty.push(query)
        result.boxes.append((track_id, box))
        result.forecasts.append(_forecast_record(frame, track_id, box, forecast))
        result.births.append(track_id)
        logger.info(f"Track {track_id} born at frame {frame} with score {box.score:.3f}")

    result.state = TrackerState(tracks=tuple(next_tracks), queues=queues, next_id=next_id, frame=frame)
    result.boxes = select_outputs(result.boxes, config)
    emitted = {i for i, _ in result.boxes}
    result.forecasts = [f for f in result.forecasts if f.id in emitted]
    return result


def run_sequence(
    detections: Sequence[DetectionRecord],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    last_frame: int = -1,
    counter: Optional[FlopCounter] = None,
) -> SequenceResult:
    """
    Track one detection log from frame 0 to its last frame.

    Frames without detections are still stepped, so tracks can coast through them.
    """
    check_params(params, config)
    state = TrackerState()
    result = SequenceResult()
    for frame in group_by_frame(detections, last_frame):
        stepped = step(state, frame, params, config, counter)
        state = stepped.state
        result.tracks.extend(TrackRecord.from_box(frame.frame, i, b) for i, b in stepped.boxes)
        result.forecasts.extend(stepped.forecasts)
    logger.info(f"Tracked {len(result.tracks)} boxes over {state.frame + 1} frames, {state.next_id} track ids")
    return result
