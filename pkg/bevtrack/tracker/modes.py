"""
Dispatch of the tracker modes shared by `track`, `bench` and `repro`.
"""
import logging
from typing import Mapping, Optional, Sequence

import numpy as np

from bevtrack.baselines.tbd import run_tbd
from bevtrack.baselines.velocity import run_velocity_variant
from bevtrack.errors import ConfigError
from bevtrack.model.config import BaselineConfig, TrackerConfig
from bevtrack.model.records import DetectionRecord
from bevtrack.tracker.engine import SequenceResult, run_sequence

logger = logging.getLogger(__name__)

MODES = ("query", "query-no-ext", "velocity", "tbd-hungarian", "tbd-greedy")
# alternative names of the query-propagation modes
MODE_ALIASES = {"pftrack": "query", "pftrack-no-ext": "query-no-ext"}


def canonical_mode(mode: str) -> str:
    """
    Resolve a mode name or alias.

    Raises:
        ConfigError: On an unknown mode
    """
    resolved = MODE_ALIASES.get(mode, mode)
    if resolved not in MODES:
        names = ", ".join(MODES + tuple(MODE_ALIASES))
        raise ConfigError(f"Unknown tracker mode {mode!r}; expected one of {names}", "UNKNOWN_MODE", {"mode": mode})
    return resolved


def run_mode(
    mode: str,
    detections: Sequence[DetectionRecord],
    params: Optional[Mapping[str, np.ndarray]],
    config: TrackerConfig,
    baseline: BaselineConfig = BaselineConfig(),
    last_frame: int = -1,
) -> SequenceResult:
    """
    Run one tracker mode over a detection log.

    Raises:
        ConfigError: On an unknown mode
    """
    mode = canonical_mode(mode)
    logger.debug(f"Running mode {mode} on {len(detections)} detections")
    if mode == "query":
        return run_sequence(detections, params, config, last_frame)
    if mode == "query-no-ext":
        return run_sequence(detections, params, config.model_copy(update={"tau_e": 0}), last_frame)
    if mode == "velocity":
        return run_velocity_variant(detections, params, config, last_frame)
    baseline = baseline.model_copy(update={"mode": mode.split("-", 1)[1], "frame_period": config.frame_period})
    return run_tbd(detections, baseline, last_frame)
