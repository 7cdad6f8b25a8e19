import logging
from typing import List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from bevtrack.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

# stands in for gated pairs so the solver never sees inf
GATED_COST = 1e6

Pairs = List[Tuple[int, int]]


def hungarian(cost: np.ndarray) -> Pairs:
    """
    Minimum-total-cost one-to-one assignment of a (possibly rectangular) matrix.

    Returns:
        (row, col) pairs sorted by row

    Raises:
        NumericalError: If any cost is not finite
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise NumericalError("Assignment costs must be finite", "NON_FINITE", {"shape": list(cost.shape)})
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def greedy(cost: np.ndarray, gate: float = np.inf) -> Pairs:
    """Repeatedly take the cheapest remaining pair below the gate."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size == 0:
        return []
    order = np.argsort(cost, axis=None, kind="stable")
    used_rows, used_cols, pairs = set(), set(), []
    for flat in order:
        r, c = np.unravel_index(flat, cost.shape)
        if cost[r, c] >= gate:
            break
        if r in used_rows or c in used_cols:
            continue
        used_rows.add(r)
        used_cols.add(c)
        pairs.append((int(r), int(c)))
    return sorted(pairs)


def associate(cost: np.ndarray, gate: float, mode: str = "hungarian") -> Pairs:
    """
    Gated assignment: pairs at or beyond `gate` are never returned.

    Raises:
        ConfigError: On an unknown mode
    """
    cost = np.asarray(cost, dtype=np.float64)
    if mode == "greedy":
        return greedy(cost, gate)
    if mode != "hungarian":
        raise ConfigError(f"Unknown association mode {mode!r}", "UNKNOWN_MODE", {"mode": mode})
    if cost.size == 0:
        return []
    gated = np.where(cost < gate, cost, GATED_COST)
    return [(r, c) for r, c in hungarian(gated) if cost[r, c] < gate]
