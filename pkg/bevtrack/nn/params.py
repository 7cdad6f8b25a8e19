"""
Parameter naming, seeded initialization and shape checks for the
query tracker's learned blocks.
"""
import logging
from typing import Dict, Mapping, MutableMapping, Tuple

import numpy as np

from bevtrack.errors import ShapeError
from bevtrack.model.config import TrackerConfig
from bevtrack.nn.rng import uniform_init

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]

CROSS_FRAME = "past.cross_frame"
CROSS_OBJECT = "past.cross_object"
REFINE_HEAD = "past.refine_head"
MOTION_ATTN = "future.motion_attn"
DECODE_HEAD = "future.decode_head"

# dx, dy, dz, l, w, h, yaw, vx, vy, score
REFINE_OUTPUTS = 10
FFN_EXPANSION = 4
RESIDUAL_SCALE = 0.1


def _decoder_shapes(prefix: str, config: TrackerConfig) -> Dict[str, Tuple[int, ...]]:
    d, hidden = config.d, FFN_EXPANSION * config.d
    shapes: Dict[str, Tuple[int, ...]] = {}
    for i in range(config.n_layers):
        layer = f"{prefix}.layer{i}"
        for name in ("q", "k", "v", "o"):
            shapes[f"{layer}.attn.w{name}"] = (d, d)
            shapes[f"{layer}.attn.b{name}"] = (d,)
        shapes[f"{layer}.ffn.w0"] = (d, hidden)
        shapes[f"{layer}.ffn.b0"] = (hidden,)
        shapes[f"{layer}.ffn.w1"] = (hidden, d)
        shapes[f"{layer}.ffn.b1"] = (d,)
    return shapes


def expected_shapes(config: TrackerConfig) -> Dict[str, Tuple[int, ...]]:
    """Every parameter the tracker reads, with its shape."""
    d = config.d
    shapes = {
        f"{CROSS_FRAME}.time_proj": (config.time_pe_dim, d),
        f"{CROSS_FRAME}.offset_proj": (2, d),
        f"{CROSS_OBJECT}.pos_proj": (config.pos_pe_dim, d),
        f"{REFINE_HEAD}.w0": (d, d),
        f"{REFINE_HEAD}.b0": (d,),
        f"{REFINE_HEAD}.w1": (d, REFINE_OUTPUTS),
        f"{REFINE_HEAD}.b1": (REFINE_OUTPUTS,),
        f"{MOTION_ATTN}.time_proj": (config.time_pe_dim, d),
        f"{MOTION_ATTN}.offset_proj": (2, d),
        f"{DECODE_HEAD}.w0": (d, d),
        f"{DECODE_HEAD}.b0": (d,),
        f"{DECODE_HEAD}.w1": (d, 2),
        f"{DECODE_HEAD}.b1": (2,),
        f"{DECODE_HEAD}.kinematic": (config.tau_f, config.tau_h + 1),
    }
    for prefix in (CROSS_FRAME, CROSS_OBJECT, MOTION_ATTN):
        shapes.update(_decoder_shapes(prefix, config))
    return shapes


def _init_scale(name: str) -> float:
    if name.startswith(f"{REFINE_HEAD}.w1") or name.startswith(f"{REFINE_HEAD}.b1"):
        return 0.0
    if name.startswith(f"{DECODE_HEAD}.w1") or name.startswith(f"{DECODE_HEAD}.b1"):
        return 0.0
    if name == f"{MOTION_ATTN}.offset_proj":
        return RESIDUAL_SCALE
    if name.startswith("past.") and (".attn.wo" in name or ".attn.bo" in name or ".ffn.w1" in name or ".ffn.b1" in name):
        return RESIDUAL_SCALE
    return 1.0


def init_params(config: TrackerConfig, seed: int = 0) -> Params:
    """
    Seeded initialization: uniform(+-1/sqrt(fan_in)) per named stream.

    Head output layers start at zero, the kinematic decode path at the
    box-velocity step for every horizon step (constant velocity), and
    the residual outputs of the past-reasoning blocks at a tenth of the
    uniform bound.
    """
    params: Params = {}
    shapes = expected_shapes(config)
    for name, shape in sorted(shapes.items()):
        if name == f"{DECODE_HEAD}.kinematic":
            params[name] = np.zeros(shape)
            params[name][:, 0] = 1.0
            continue
        scale = _init_scale(name)
        if scale == 0.0:
            params[name] = np.zeros(shape)
            continue
        weight_name = name[:-2] + "w" + name[-1] if name.rsplit(".", 1)[1].startswith("b") else name
        fan_in = shapes[weight_name][0]
        params[name] = uniform_init(seed, name, shape, fan_in, scale)
    logger.info(f"Initialized {len(params)} parameter arrays ({param_count(params)} values) with seed {seed}")
    return params


def param_count(params: Mapping[str, np.ndarray]) -> int:
    return int(sum(np.asarray(v).size for v in params.values()))


def check_params(params: Mapping[str, np.ndarray], config: TrackerConfig) -> None:
    """
    Verify that a parameter set fits the configuration.

    Raises:
        ShapeError: On missing, unexpected or mis-shaped arrays (for example
            weights trained for a different feature dim)
    """
    shapes = expected_shapes(config)
    missing = sorted(set(shapes) - set(params))
    unexpected = sorted(set(params) - set(shapes))
    wrong = {
        name: {"expected": list(shapes[name]), "actual": list(np.shape(params[name]))}
        for name in sorted(set(shapes) & set(params))
        if tuple(np.shape(params[name])) != shapes[name]
    }
    if missing or unexpected or wrong:
        raise ShapeError(
            f"Weights do not fit d={config.d}: {len(missing)} missing, {len(unexpected)} unexpected, {len(wrong)} mis-shaped",
            "DIM_MISMATCH",
            {"missing": missing[:10], "unexpected": unexpected[:10], "mis_shaped": dict(list(wrong.items())[:10])}
        )


def accumulate(total: MutableMapping[str, np.ndarray], prefix: str, grads: Mapping[str, np.ndarray]) -> None:
    """Add `grads` (keyed relative to `prefix`) into `total`."""
    for name, grad in grads.items():
        key = f"{prefix}.{name}"
        if key in total:
            total[key] = total[key] + grad
        else:
            total[key] = np.array(grad, dtype=np.float64)
