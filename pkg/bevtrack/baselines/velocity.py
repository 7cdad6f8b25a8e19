from typing import Mapping, Sequence

import numpy as np

from bevtrack.model.config import TrackerConfig
from bevtrack.model.records import DetectionRecord
from bevtrack.tracker.engine import SequenceResult, run_sequence


def run_velocity_variant(
    detections: Sequence[DetectionRecord],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    last_frame: int = -1,
) -> SequenceResult:
    """
    Query tracker whose propagation and coasting follow the refined box
    velocity times the frame period instead of the learned forecast.
    """
    return run_sequence(detections, params, config.model_copy(update={"propagation": "velocity"}), last_frame)
