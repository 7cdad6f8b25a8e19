import logging
from typing import List, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from bevtrack.core.geometry import normalize_yaw
from bevtrack.errors import ConfigError
from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Box3D, Query, Vec2, Vec3
from bevtrack.model.tracking import QueryQueue
from bevtrack.nn.attention import AttentionParams, block_forward, decoder_layers, mha_forward
from bevtrack.nn.encoding import positional_encoding_3d, sinusoidal_pe
from bevtrack.nn.flops import ATTN, FlopCounter
from bevtrack.nn.layers import MlpParams, mlp_forward
from bevtrack.nn.params import CROSS_FRAME, CROSS_OBJECT, REFINE_HEAD
from bevtrack.nn.rng import stream, uniform_init

logger = logging.getLogger(__name__)

SCORE_EPS = 1e-7


class RefinementOutput(BaseModel):
    """Decoded refinement-head output for one track."""
    model_config = ConfigDict(frozen=True)

    residual: Vec3
    size: Vec3
    yaw: float
    velocity: Vec2
    score: float


def with_feature(query: Query, feature: np.ndarray) -> Query:
    return Query(
        track_ref=query.track_ref,
        feature=tuple(float(v) for v in feature),
        center=query.center,
        timestamp=query.timestamp,
    )


def history_tokens(queue: QueryQueue, current: Query, d: int) -> Tuple[np.ndarray, np.ndarray, List[Optional[Query]]]:
    """
    Key rows for one track: the queue slots for offsets -tau_h..-1 (zeros
    where empty) followed by the current query.

    Returns:
        (features (tau_h + 1, d), presence mask, slot queries with the current last)
    """
    slots, mask = queue.slots(current.timestamp)
    slots = slots + [current]
    tokens = np.zeros((len(slots), d))
    for row, q in enumerate(slots):
        if q is not None:
            tokens[row] = q.feature_array
    return tokens, np.array(mask + [True]), slots


def history_offsets(slots: List[Optional[Query]], current: Query) -> np.ndarray:
    """XY offset of every slot from the current center, zeros where empty."""
    offsets = np.zeros((len(slots), 2))
    for row, q in enumerate(slots):
        if q is not None:
            offsets[row] = q.center_array[:2] - current.center_array[:2]
    return offsets


def time_encoding(offsets, params: Mapping[str, np.ndarray], prefix: str, config: TrackerConfig) -> np.ndarray:
    """Sinusoidal encoding of relative frame offsets, projected to the model dim."""
    pe = sinusoidal_pe(np.asarray(offsets, dtype=np.float64), config.time_pe_dim, config.pe_base)
    return pe @ params[f"{prefix}.time_proj"]


def cross_frame_refine(
    queue: QueryQueue,
    current: Query,
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    counter: Optional[FlopCounter] = None,
) -> Query:
    """
    Refine the current query by attending over its own history and itself.

    Each key and value token is the slot feature plus a projection of its XY
    offset from the current center. Empty queue slots are masked; the center
    is never modified.
    """
    if not config.use_cross_frame:
        return current
    tokens, mask, slots = history_tokens(queue, current, config.d)
    tokens = tokens + history_offsets(slots, current) @ params[f"{CROSS_FRAME}.offset_proj"]
    k_pe = time_encoding(np.arange(-config.tau_h, 1), params, CROSS_FRAME, config)
    q_pe = k_pe[-1:]
    layers = decoder_layers(params, CROSS_FRAME, config.n_layers, config.n_heads)
    refined, _ = block_forward(current.feature_array[None, :], layers, q_pe, tokens, k_pe, mask, counter)
    return with_feature(current, refined[0])


def cross_object_refine(
    queries: List[Query],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    counter: Optional[FlopCounter] = None,
) -> List[Query]:
    """
    Exchange features among all queries of one frame, guided by their 3D
    positional encodings. Output order follows input order.
    """
    if not queries or not config.use_cross_object:
        return list(queries)
    bounds = (config.region_min, config.region_max)
    pe = np.stack([positional_encoding_3d(q.center, bounds, config.pos_pe_dim, config.pe_base) for q in queries])
    pe = pe @ params[f"{CROSS_OBJECT}.pos_proj"]
    features = np.stack([q.feature_array for q in queries])
    layers = decoder_layers(params, CROSS_OBJECT, config.n_layers, config.n_heads)
    refined, _ = block_forward(features, layers, pe, counter=counter)
    return [with_feature(q, row) for q, row in zip(queries, refined)]


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inverse(y):
    y = np.asarray(y, dtype=np.float64)
    return y + np.log(-np.expm1(-y))


def logit(p):
    p = np.clip(np.asarray(p, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS)
    return np.log(p) - np.log1p(-p)


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def decode_refinement(raw: np.ndarray, box: Box3D) -> RefinementOutput:
    """
    Decode the ten head outputs relative to the stub box: center residuals,
    then size, yaw, velocity and score as offsets in softplus, angle,
    linear and logit space respectively.
    """
    size = softplus(softplus_inverse(box.size) + raw[3:6])
    return RefinementOutput(
        residual=tuple(float(v) for v in raw[0:3]),
        size=tuple(float(v) for v in size),
        yaw=normalize_yaw(box.yaw + float(raw[6])),
        velocity=(box.velocity[0] + float(raw[7]), box.velocity[1] + float(raw[8])),
        score=float(sigmoid(logit(box.score) + raw[9])),
    )


def refine_track(
    query: Query,
    box: Box3D,
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    counter: Optional[FlopCounter] = None,
) -> Tuple[Box3D, RefinementOutput]:
    """
    Refine the stub box of one track from its refined query feature.

    Args:
        query: Refined query, colocated with `box`
        box: Stub-decoder box of the same object and frame
        params: Tracker parameters
        config: Tracker configuration

    Returns:
        (refined box, decoded head output); the feature is left untouched
    """
    if config.use_track_refinement:
        raw = mlp_forward(query.feature_array, MlpParams.from_params(params, REFINE_HEAD), counter)
    else:
        raw = np.zeros(10)
    out = decode_refinement(raw, box)
    refined = Box3D(
        center=tuple(c + r for c, r in zip(box.center, out.residual)),
        size=out.size,
        yaw=out.yaw,
        velocity=out.velocity,
        score=min(max(out.score, 0.0), 1.0),
        class_id=box.class_id,
    )
    return refined, out


class FlopComparison(BaseModel):
    """Measured attention cost of global versus decoupled attention."""
    model_config = ConfigDict(frozen=True)

    n: int
    tau: int
    d: int
    global_attn: int
    decoupled_attn: int
    global_total: int
    decoupled_total: int

    @property
    def ratio(self) -> float:
        return self.global_attn / self.decoupled_attn if self.decoupled_attn else float("inf")


def _bench_attention(d: int, n_heads: int) -> AttentionParams:
    names = ("wq", "wk", "wv", "wo")
    arrays = {name: uniform_init(0, f"bench.{name}", (d, d), d) for name in names}
    arrays.update({"b" + name[1]: np.zeros(d) for name in names})
    return AttentionParams(n_heads=n_heads, **arrays)


def flop_compare(n: int, tau: int, d: int, n_heads: int = 1) -> FlopComparison:
    """
    Count multiply-adds of one global attention over n*tau tokens against
    n cross-frame calls (one query, tau keys) plus one n x n cross-object call.

    Attention over a single key is an identity mixture and is not run.
    """
    if n < 1 or tau < 1:
        raise ConfigError(f"n and tau must be positive, got n={n}, tau={tau}", "CONFIG_INVALID")
    attn = _bench_attention(d, n_heads)
    tokens = stream(0, "bench.tokens").standard_normal((n * tau, d))

    global_counter = FlopCounter()
    if n * tau > 1:
        mha_forward(tokens, tokens, tokens, None, None, None, attn, global_counter)

    decoupled = FlopCounter()
    if tau > 1:
        for i in range(n):
            track = tokens[i * tau:(i + 1) * tau]
            mha_forward(track[-1:], track, track, None, None, None, attn, decoupled)
    if n > 1:
        current = tokens[tau - 1::tau]
        mha_forward(current, current, current, None, None, None, attn, decoupled)

    comparison = FlopComparison(
        n=n, tau=tau, d=d,
        global_attn=global_counter[ATTN], decoupled_attn=decoupled[ATTN],
        global_total=global_counter.total, decoupled_total=decoupled.total,
    )
    logger.debug(f"flop_compare n={n} tau={tau} d={d}: {comparison.global_attn} vs {comparison.decoupled_attn}")
    return comparison
