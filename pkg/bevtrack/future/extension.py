import logging
from typing import List, Tuple, Union

from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Box3D, Query, TrajectoryForecast
from bevtrack.model.tracking import Terminated, TrackState

logger = logging.getLogger(__name__)


def shift_forecast(forecast: TrajectoryForecast) -> TrajectoryForecast:
    """Drop the first step and repeat the last one; the origin advances one frame."""
    movements = forecast.movements[1:] + forecast.movements[-1:]
    return TrajectoryForecast(origin_frame=forecast.origin_frame + 1, movements=movements)


def propagate_track(track: TrackState) -> TrackState:
    """
    Advance one track to the next frame along the first forecast step.

    The feature is carried unchanged; query and box centers move in XY.
    """
    dx, dy = track.forecast.movements[0]
    x, y, z = track.query.center
    center = (x + dx, y + dy, z)
    query = Query(
        track_ref=track.query.track_ref,
        feature=track.query.feature,
        center=center,
        timestamp=track.query.timestamp + 1,
    )
    bx, by, bz = track.box.center
    box = track.box.model_copy(update={"center": (bx + dx, by + dy, bz)})
    return track.model_copy(update={"query": query, "box": box, "forecast": shift_forecast(track.forecast)})


def propagate(tracks: List[TrackState]) -> List[TrackState]:
    return [propagate_track(t) for t in tracks]


def extension_step(
    track: TrackState,
    refined: Tuple[Query, Box3D, TrajectoryForecast],
    config: TrackerConfig,
) -> Union[TrackState, Terminated]:
    """
    One life-cycle transition of a track at the frame of its refined outputs.

    A confident refinement (score >= theta_ext) is adopted and propagated,
    resetting the extension count. Otherwise the track coasts along its
    frozen forecast while fewer than tau_e frames have been extended, and
    terminates after that.

    Args:
        track: The track as propagated to this frame
        refined: (refined query, refined box, forecast) for this frame
        config: Tracker configuration

    Returns:
        The track propagated to the next frame, or Terminated
    """
    query, box, forecast = refined
    frame = query.timestamp
    if box.score >= config.theta_ext:
        adopted = TrackState(
            id=track.id,
            active=True,
            extension_count=0,
            last_confident_frame=frame,
            query=query,
            forecast=forecast,
            box=box,
        )
        return propagate_track(adopted)

    if track.extension_count < config.tau_e:
        if track.extension_count == 0:
            logger.info(f"Track {track.id} extended at frame {frame} (score {box.score:.3f})")
        coasted = track.model_copy(update={"active": False, "extension_count": track.extension_count + 1})
        return propagate_track(coasted)

    logger.info(f"Track {track.id} terminated at frame {frame} after {track.extension_count} extended frames")
    return Terminated(id=track.id, frame=frame)
