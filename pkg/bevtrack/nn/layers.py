from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from bevtrack.errors import ShapeError
from bevtrack.nn.flops import PROJ, FlopCounter, matmul

ACTIVATIONS = ("relu", "identity")


@dataclass(frozen=True)
class MlpParams:
    """
    Affine layers y = act(x @ w + b), weights stored (in, out).
    """
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    activations: Tuple[str, ...]

    def __post_init__(self):
        if not len(self.weights) == len(self.biases) == len(self.activations):
            raise ShapeError("MLP needs one bias and activation per weight", "SHAPE_MISMATCH")
        for i, (w, b, act) in enumerate(zip(self.weights, self.biases, self.activations)):
            if act not in ACTIVATIONS:
                raise ShapeError(f"Unknown activation {act!r}", "SHAPE_MISMATCH", {"layer": i})
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeError(f"Layer {i}: bias {b.shape} does not fit weight {w.shape}", "SHAPE_MISMATCH")
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ShapeError(
                    f"Layer {i} expects {w.shape[0]} inputs, previous layer gives {self.weights[i - 1].shape[1]}",
                    "SHAPE_MISMATCH"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    @classmethod
    def from_params(
        cls,
        params: Mapping[str, np.ndarray],
        prefix: str,
        activations: Tuple[str, ...] = ("relu", "identity"),
    ) -> "MlpParams":
        n = len(activations)
        return cls(
            weights=tuple(params[f"{prefix}.w{i}"] for i in range(n)),
            biases=tuple(params[f"{prefix}.b{i}"] for i in range(n)),
            activations=activations,
        )


@dataclass
class MlpCache:
    mlp: MlpParams
    inputs: List[np.ndarray]
    pre: List[np.ndarray]
    squeeze: bool


def mlp_forward(x: np.ndarray, mlp: MlpParams, counter: Optional[FlopCounter] = None) -> np.ndarray:
    """Forward pass on a vector or on a batch of row vectors."""
    return mlp_forward_cached(x, mlp, counter)[0]


def mlp_forward_cached(
    x: np.ndarray,
    mlp: MlpParams,
    counter: Optional[FlopCounter] = None,
) -> Tuple[np.ndarray, MlpCache]:
    h = np.asarray(x, dtype=np.float64)
    squeeze = h.ndim == 1
    h = np.atleast_2d(h)
    if h.shape[1] != mlp.in_dim:
        raise ShapeError(f"MLP expects {mlp.in_dim} inputs, got {h.shape[1]}", "DIM_MISMATCH")
    inputs, pre = [], []
    for w, b, act in zip(mlp.weights, mlp.biases, mlp.activations):
        inputs.append(h)
        z = matmul(h, w, counter, PROJ) + b
        pre.append(z)
        h = np.maximum(z, 0.0) if act == "relu" else z
    return (h[0] if squeeze else h), MlpCache(mlp=mlp, inputs=inputs, pre=pre, squeeze=squeeze)


def mlp_backward(cache: MlpCache, dy: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """
    Backward pass.

    Returns:
        (gradient w.r.t. the input, parameter gradients keyed w0, b0, w1, ...)
    """
    g = np.atleast_2d(np.asarray(dy, dtype=np.float64))
    if g.shape != cache.pre[-1].shape:
        raise ShapeError(f"Upstream gradient {g.shape} does not match output {cache.pre[-1].shape}", "SHAPE_MISMATCH")
    grads: Dict[str, np.ndarray] = {}
    mlp = cache.mlp
    for i in reversed(range(len(mlp.weights))):
        if mlp.activations[i] == "relu":
            g = g * (cache.pre[i] > 0.0)
        grads[f"w{i}"] = cache.inputs[i].T @ g
        grads[f"b{i}"] = g.sum(axis=0)
        g = g @ mlp.weights[i].T
    return (g[0] if cache.squeeze else g), grads
