from typing import Sequence

import numpy as np

from bevtrack.errors import ShapeError
from bevtrack.model.geometry import TrajectoryForecast


def velocity_forecast_baseline(history_centers: Sequence[Sequence[float]], horizon: int, origin_frame: int = 0) -> TrajectoryForecast:
    """
    Constant-velocity forecast: repeat the last observed per-frame XY
    displacement for `horizon` steps.

    Raises:
        ShapeError: With fewer than two history centers
    """
    centers = np.asarray(history_centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] < 2:
        raise ShapeError("Constant-velocity forecast needs at least two history centers", "SHAPE_MISMATCH",
                         {"centers": int(centers.shape[0]) if centers.ndim else 0})
    step = centers[-1, :2] - centers[-2, :2]
    return TrajectoryForecast.from_array(origin_frame, np.tile(step, (horizon, 1)))
