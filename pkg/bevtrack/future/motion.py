"""
Motion-embedding attention and trajectory decoding.

Motion rows start at zero and attend over a track's history tokens and its
current token. Each token is its feature plus a projection of its XY offset
from the current center. Rows are decoded per step by an MLP plus a linear
kinematic path: per-step coefficients over the box-velocity step and the
track's mean displacement across each history lag.
"""
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from bevtrack.errors import ShapeError
from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Query, TrajectoryForecast, Vec2
from bevtrack.model.tracking import QueryQueue
from bevtrack.nn.attention import BlockCache, block_backward, block_forward, decoder_layers
from bevtrack.nn.encoding import sinusoidal_pe
from bevtrack.nn.flops import FlopCounter
from bevtrack.nn.layers import MlpCache, MlpParams, mlp_backward, mlp_forward_cached
from bevtrack.nn.params import DECODE_HEAD, MOTION_ATTN
from bevtrack.past.reasoning import history_offsets, history_tokens


@dataclass(frozen=True)
class MotionEmbedding:
    """tau_f motion rows of width d, attended from frame `origin_frame`."""
    origin_frame: int
    rows: np.ndarray

    def __post_init__(self):
        if self.rows.ndim != 2:
            raise ShapeError(f"Motion embedding must be 2-D, got {self.rows.shape}", "SHAPE_MISMATCH")


@dataclass(frozen=True)
class MotionInputs:
    """Everything the motion head reads for one track at one frame."""
    origin_frame: int
    features: np.ndarray
    offsets: np.ndarray
    mask: np.ndarray
    kinematics: np.ndarray


@dataclass
class MotionCache:
    inputs: MotionInputs
    q_pe_raw: np.ndarray
    k_pe_raw: np.ndarray
    block: BlockCache
    mlp: MlpCache
    decoded: np.ndarray
    embedding: MotionEmbedding


def kinematic_features(slots: Sequence[Optional[Query]], velocity: Vec2, frame_period: float) -> np.ndarray:
    """
    Per-frame step estimates for one track, shape (len(slots), 2).

    Row 0 is the box velocity times the frame period. Row k is the mean
    per-frame displacement from the slot k frames back to the current token
    (the last slot); empty slots take the box-velocity step.
    """
    step = np.asarray(velocity, dtype=np.float64) * frame_period
    current = slots[-1].center_array[:2]
    rows = [step]
    for lag in range(1, len(slots)):
        past = slots[-1 - lag]
        rows.append(step if past is None else (current - past.center_array[:2]) / lag)
    return np.stack(rows)


def motion_inputs(
    queue: QueryQueue,
    current: Query,
    config: TrackerConfig,
    velocity: Vec2 = (0.0, 0.0),
) -> MotionInputs:
    features, mask, slots = history_tokens(queue, current, config.d)
    return MotionInputs(
        origin_frame=current.timestamp,
        features=features,
        offsets=history_offsets(slots, current),
        mask=mask,
        kinematics=kinematic_features(slots, velocity, config.frame_period),
    )


def _time_pe(config: TrackerConfig) -> Tuple[np.ndarray, np.ndarray]:
    q_pe = sinusoidal_pe(np.arange(1, config.tau_f + 1, dtype=np.float64), config.time_pe_dim, config.pe_base)
    k_pe = sinusoidal_pe(np.arange(-config.tau_h, 1, dtype=np.float64), config.time_pe_dim, config.pe_base)
    return q_pe, k_pe


def motion_forward(
    inputs: MotionInputs,
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    counter: Optional[FlopCounter] = None,
) -> Tuple[np.ndarray, MotionCache]:
    """
    Returns:
        (movements of shape (tau_f, 2), cache for motion_backward)
    """
    q_pe_raw, k_pe_raw = _time_pe(config)
    time_proj = params[f"{MOTION_ATTN}.time_proj"]
    tokens = inputs.features + inputs.offsets @ params[f"{MOTION_ATTN}.offset_proj"]
    layers = decoder_layers(params, MOTION_ATTN, config.n_layers, config.n_heads)
    rows, block = block_forward(
        np.zeros((config.tau_f, config.d)), layers, q_pe_raw @ time_proj,
        tokens, k_pe_raw @ time_proj, inputs.mask, counter,
    )
    decoded, mlp = mlp_forward_cached(rows, MlpParams.from_params(params, DECODE_HEAD), counter)
    movements = decoded + params[f"{DECODE_HEAD}.kinematic"] @ inputs.kinematics
    cache = MotionCache(
        inputs=inputs, q_pe_raw=q_pe_raw, k_pe_raw=k_pe_raw, block=block, mlp=mlp, decoded=decoded,
        embedding=MotionEmbedding(origin_frame=inputs.origin_frame, rows=rows),
    )
    return movements, cache


def motion_backward(cache: MotionCache, d_movements: np.ndarray) -> Dict[str, np.ndarray]:
    """Gradients of motion_forward for every future.* parameter."""
    grads: Dict[str, np.ndarray] = {f"{DECODE_HEAD}.kinematic": d_movements @ cache.inputs.kinematics.T}
    d_rows, mlp_grads = mlp_backward(cache.mlp, d_movements)
    grads.update({f"{DECODE_HEAD}.{k}": v for k, v in mlp_grads.items()})

    block = block_backward(cache.block, d_rows)
    for i, layer_grads in enumerate(block.params):
        grads.update({f"{MOTION_ATTN}.layer{i}.{k}": v for k, v in layer_grads.items()})
    grads[f"{MOTION_ATTN}.time_proj"] = cache.q_pe_raw.T @ block.q_pe + cache.k_pe_raw.T @ block.k_pe
    grads[f"{MOTION_ATTN}.offset_proj"] = cache.inputs.offsets.T @ block.keys
    return grads


def predict_motion(
    queue: QueryQueue,
    current: Query,
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    velocity: Vec2 = (0.0, 0.0),
    counter: Optional[FlopCounter] = None,
) -> TrajectoryForecast:
    """
    Forecast tau_f per-frame XY movements for one refined query.

    Args:
        queue: The track's query queue (may be empty)
        current: Refined query of the current frame
        params: Tracker parameters
        config: Tracker configuration
        velocity: Box velocity (m/s) of the refined box
    """
    movements, _ = motion_forward(motion_inputs(queue, current, config, velocity), params, config, counter)
    return TrajectoryForecast.from_array(current.timestamp, movements)


def constant_velocity_forecast(origin_frame: int, velocity: Vec2, config: TrackerConfig) -> TrajectoryForecast:
    """Repeat velocity x frame period for tau_f steps."""
    step = np.asarray(velocity, dtype=np.float64) * config.frame_period
    return TrajectoryForecast.from_array(origin_frame, np.tile(step, (config.tau_f, 1)))
