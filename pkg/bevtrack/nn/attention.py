"""
Masked multi-head attention and the decoder layers built from it.

A decoder layer is attention with a residual connection followed by a
rectifier feed-forward sublayer with its own residual. No layer norm.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from bevtrack.errors import AttentionError, NumericalError, ShapeError
from bevtrack.nn.flops import ATTN, PROJ, FlopCounter, matmul
from bevtrack.nn.layers import MlpCache, MlpParams, mlp_backward, mlp_forward_cached

ATTENTION_KEYS = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")


@dataclass(frozen=True)
class AttentionParams:
    """Query/key/value/output projections, weights stored (in, out)."""
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    n_heads: int

    def __post_init__(self):
        d = self.wq.shape[0]
        if d % self.n_heads:
            raise ShapeError(f"Model dim {d} is not divisible by {self.n_heads} heads", "SHAPE_MISMATCH")
        for name in ATTENTION_KEYS:
            array = getattr(self, name)
            expected = (d, d) if name.startswith("w") else (d,)
            if array.shape != expected:
                raise ShapeError(f"{name} has shape {array.shape}, expected {expected}", "SHAPE_MISMATCH")

    @property
    def model_dim(self) -> int:
        return self.wq.shape[0]

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.n_heads

    @classmethod
    def from_params(cls, params: Mapping[str, np.ndarray], prefix: str, n_heads: int) -> "AttentionParams":
        return cls(n_heads=n_heads, **{name: params[f"{prefix}.{name}"] for name in ATTENTION_KEYS})


@dataclass
class AttentionCache:
    """Everything mha_backward needs from a forward pass."""
    params: AttentionParams
    queries: np.ndarray
    qi: np.ndarray
    ki: np.ndarray
    values: np.ndarray
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    weights: np.ndarray
    mixed: np.ndarray
    mask: np.ndarray


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    return x.reshape(x.shape[0], n_heads, -1).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    return x.transpose(1, 0, 2).reshape(x.shape[1], -1)


def mha_forward(
    queries: np.ndarray,
    keys: np.ndarray,
    values: np.ndarray,
    q_pe: Optional[np.ndarray],
    k_pe: Optional[np.ndarray],
    mask: Optional[np.ndarray],
    params: AttentionParams,
    counter: Optional[FlopCounter] = None,
) -> Tuple[np.ndarray, AttentionCache]:
    """
    Masked multi-head attention with a residual connection.

    Positional encodings are added to queries and keys before projection.
    `mask[j]` is True when key j is present; masked keys get exactly zero
    weight.

    Returns:
        (queries + output projection of the attention mixture, cache)

    Raises:
        ShapeError: If row counts or widths do not chain
        AttentionError: If every key is masked
        NumericalError: If a score over a present key or an output is not finite
    """
    d = params.model_dim
    n_q, n_k = queries.shape[0], keys.shape[0]
    if queries.ndim != 2 or queries.shape[1] != d or keys.shape != (n_k, d) or values.shape != (n_k, d):
        raise ShapeError(
            f"Attention inputs do not chain: queries {queries.shape}, keys {keys.shape}, values {values.shape}, dim {d}",
            "SHAPE_MISMATCH"
        )
    mask = np.ones(n_k, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (n_k,):
        raise ShapeError(f"Mask length {mask.shape} does not match {n_k} keys", "SHAPE_MISMATCH")
    if n_q and not mask.any():
        raise AttentionError("Every key is masked for a live query row", "ALL_MASKED", {"keys": n_k})

    qi = queries if q_pe is None else queries + q_pe
    ki = keys if k_pe is None else keys + k_pe
    q = _split_heads(matmul(qi, params.wq, counter, PROJ) + params.bq, params.n_heads)
    k = _split_heads(matmul(ki, params.wk, counter, PROJ) + params.bk, params.n_heads)
    v = _split_heads(matmul(values, params.wv, counter, PROJ) + params.bv, params.n_heads)

    scores = matmul(q, k.transpose(0, 2, 1), counter, ATTN) / np.sqrt(params.head_dim)
    if not np.isfinite(scores[:, :, mask]).all():
        raise NumericalError("Attention scores are not finite", "NON_FINITE", {"queries": n_q, "keys": n_k})
    scores[:, :, ~mask] = -np.inf
    scores = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(scores)
    weights /= weights.sum(axis=-1, keepdims=True)

    mixed = _merge_heads(matmul(weights, v, counter, ATTN))
    out = queries + matmul(mixed, params.wo, counter, PROJ) + params.bo
    if not np.isfinite(out).all():
        raise NumericalError("Attention output is not finite", "NON_FINITE", {"queries": n_q, "keys": n_k})
    cache = AttentionCache(
        params=params, queries=queries, qi=qi, ki=ki, values=values,
        q=q, k=k, v=v, weights=weights, mixed=mixed, mask=mask,
    )
    return out, cache


@dataclass
class AttentionGrads:
    params: Dict[str, np.ndarray]
    queries: np.ndarray
    keys: np.ndarray
    values: np.ndarray
    q_pe: np.ndarray
    k_pe: np.ndarray


def mha_backward(cache: AttentionCache, dout: np.ndarray) -> AttentionGrads:
    """
    Gradients of mha_forward for every parameter and input.

    Raises:
        ShapeError: If the upstream gradient does not match the forward output
    """
    p = cache.params
    if dout.shape != cache.queries.shape:
        raise ShapeError(f"Upstream gradient {dout.shape} does not match output {cache.queries.shape}", "SHAPE_MISMATCH")

    d_wo = cache.mixed.T @ dout
    d_bo = dout.sum(axis=0)
    d_mixed = _split_heads(dout @ p.wo.T, p.n_heads)

    d_weights = d_mixed @ cache.v.transpose(0, 2, 1)
    d_v = cache.weights.transpose(0, 2, 1) @ d_mixed
    # softmax backward; masked entries have zero weight and so zero gradient
    d_scores = cache.weights * (d_weights - np.sum(cache.weights * d_weights, axis=-1, keepdims=True))
    d_scores /= np.sqrt(p.head_dim)
    d_q = _merge_heads(d_scores @ cache.k)
    d_k = _merge_heads(d_scores.transpose(0, 2, 1) @ cache.q)
    d_v = _merge_heads(d_v)

    d_qi = d_q @ p.wq.T
    d_ki = d_k @ p.wk.T
    grads = {
        "wq": cache.qi.T @ d_q, "bq": d_q.sum(axis=0),
        "wk": cache.ki.T @ d_k, "bk": d_k.sum(axis=0),
        "wv": cache.values.T @ d_v, "bv": d_v.sum(axis=0),
        "wo": d_wo, "bo": d_bo,
    }
    return AttentionGrads(
        params=grads,
        queries=dout + d_qi,
        keys=d_ki,
        values=d_v @ p.wv.T,
        q_pe=d_qi,
        k_pe=d_ki,
    )


@dataclass(frozen=True)
class DecoderLayer:
    attn: AttentionParams
    ffn: MlpParams

    @classmethod
    def from_params(cls, params: Mapping[str, np.ndarray], prefix: str, n_heads: int) -> "DecoderLayer":
        return cls(
            attn=AttentionParams.from_params(params, f"{prefix}.attn", n_heads),
            ffn=MlpParams.from_params(params, f"{prefix}.ffn"),
        )


def decoder_layers(params: Mapping[str, np.ndarray], prefix: str, n_layers: int, n_heads: int) -> List[DecoderLayer]:
    return [DecoderLayer.from_params(params, f"{prefix}.layer{i}", n_heads) for i in range(n_layers)]


@dataclass
class BlockCache:
    self_attention: bool
    attn: List[AttentionCache] = field(default_factory=list)
    ffn: List[MlpCache] = field(default_factory=list)


def block_forward(
    x: np.ndarray,
    layers: List[DecoderLayer],
    q_pe: Optional[np.ndarray],
    keys: Optional[np.ndarray] = None,
    k_pe: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
    counter: Optional[FlopCounter] = None,
) -> Tuple[np.ndarray, BlockCache]:
    """
    Run a stack of decoder layers.

    With `keys` None the block is self-attention: every layer attends over
    its own input with `q_pe` on both sides. Otherwise every layer attends
    over the same fixed keys, which double as values.
    """
    cache = BlockCache(self_attention=keys is None)
    for layer in layers:
        if cache.self_attention:
            x, a_cache = mha_forward(x, x, x, q_pe, q_pe, mask, layer.attn, counter)
        else:
            x, a_cache = mha_forward(x, keys, keys, q_pe, k_pe, mask, layer.attn, counter)
        ffn_out, f_cache = mlp_forward_cached(x, layer.ffn, counter)
        x = x + ffn_out
        cache.attn.append(a_cache)
        cache.ffn.append(f_cache)
    return x, cache


@dataclass
class BlockGrads:
    params: List[Dict[str, np.ndarray]]
    x: np.ndarray
    q_pe: np.ndarray
    keys: Optional[np.ndarray]
    k_pe: Optional[np.ndarray]


def block_backward(cache: BlockCache, dy: np.ndarray) -> BlockGrads:
    """
    Backward pass of block_forward.

    Parameter gradients are keyed "attn.wq", "ffn.w0", ... per layer.
    """
    g = dy
    d_q_pe = np.zeros_like(cache.attn[0].qi)
    d_keys = None if cache.self_attention else np.zeros_like(cache.attn[0].ki)
    d_k_pe = None if cache.self_attention else np.zeros_like(cache.attn[0].ki)
    layer_grads: List[Dict[str, np.ndarray]] = []
    for a_cache, f_cache in zip(reversed(cache.attn), reversed(cache.ffn)):
        d_ffn_in, ffn_grads = mlp_backward(f_cache, g)
        g = g + d_ffn_in
        a_grads = mha_backward(a_cache, g)
        if cache.self_attention:
            g = a_grads.queries + a_grads.keys + a_grads.values
            d_q_pe += a_grads.q_pe + a_grads.k_pe
        else:
            g = a_grads.queries
            d_q_pe += a_grads.q_pe
            d_keys += a_grads.keys + a_grads.values
            d_k_pe += a_grads.k_pe
        grads = {f"attn.{k}": v for k, v in a_grads.params.items()}
        grads.update({f"ffn.{k}": v for k, v in ffn_grads.items()})
        layer_grads.append(grads)
    layer_grads.reverse()
    return BlockGrads(params=layer_grads, x=g, q_pe=d_q_pe, keys=d_keys, k_pe=d_k_pe)
