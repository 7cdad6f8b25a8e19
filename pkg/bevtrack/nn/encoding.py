import logging
from typing import Sequence, Tuple

import numpy as np

from bevtrack.errors import ShapeError
from bevtrack.model.geometry import Vec3

logger = logging.getLogger(__name__)

PE_BASE = 10000.0


def sinusoidal_pe(value, dim: int, base: float = PE_BASE) -> np.ndarray:
    """
    Interleaved sinusoidal encoding.

    Component 2k is sin(v / base^(2k/dim)) and 2k+1 the matching cosine.
    An array of values gives one row per value.

    Raises:
        ShapeError: If `dim` is odd or not positive
    """
    if dim <= 0 or dim % 2:
        raise ShapeError(f"Sinusoidal encoding needs a positive even dim, got {dim}", "DIM_MISMATCH", {"dim": dim})
    if base <= 1.0:
        raise ShapeError(f"Encoding base must exceed 1, got {base}", "DIM_MISMATCH", {"base": base})
    values = np.asarray(value, dtype=np.float64)
    freq = base ** (2.0 * np.arange(dim // 2) / dim)
    angles = values[..., None] / freq
    out = np.empty(values.shape + (dim,), dtype=np.float64)
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


def positional_encoding_3d(
    center: Sequence[float],
    bounds: Tuple[Vec3, Vec3],
    dim: int,
    base: float = PE_BASE,
) -> np.ndarray:
    """
    Encode a 3D center by normalizing each axis into [0, 1] over the region
    and concatenating per-axis sinusoidal encodings of dim/3.

    Centers outside the region are clamped to its bounds and logged.
    """
    if dim % 6:
        raise ShapeError(f"3D encoding dim must be divisible by 6, got {dim}", "DIM_MISMATCH", {"dim": dim})
    lo = np.asarray(bounds[0], dtype=np.float64)
    hi = np.asarray(bounds[1], dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    unit = (c - lo) / (hi - lo)
    clamped = np.clip(unit, 0.0, 1.0)
    if np.any(clamped != unit):
        logger.warning(f"Center {tuple(c.tolist())} lies outside the region; clamped for encoding")
    return np.concatenate([sinusoidal_pe(u, dim // 3, base) for u in clamped])
