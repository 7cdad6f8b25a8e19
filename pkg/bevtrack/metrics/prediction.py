import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from bevtrack.baselines.association import associate
from bevtrack.errors import HorizonError, ShapeError
from bevtrack.metrics.clear_mot import DEFAULT_MATCH_DIST
from bevtrack.model.records import ForecastRecord, TrackRecord

logger = logging.getLogger(__name__)


class PredictionErrors(BaseModel):
    """Displacement errors over matched forecasts; None without samples."""
    model_config = ConfigDict(frozen=True)

    ade: Optional[float]
    fde: Optional[float]
    samples: int
    horizon: int


def displacement_errors(pred_positions: np.ndarray, gt_positions: np.ndarray) -> Tuple[float, float]:
    """
    ADE and FDE of one or more trajectories of shape (..., steps, 2).
    """
    pred_positions = np.asarray(pred_positions, dtype=np.float64)
    gt_positions = np.asarray(gt_positions, dtype=np.float64)
    if pred_positions.shape != gt_positions.shape or pred_positions.shape[-1] != 2:
        raise ShapeError(
            f"Trajectory shapes differ: {pred_positions.shape} vs {gt_positions.shape}", "SHAPE_MISMATCH"
        )
    err = np.linalg.norm(pred_positions - gt_positions, axis=-1)
    return float(err.mean()), float(err[..., -1].mean())


def forecast_positions(origin: Sequence[float], movements: np.ndarray) -> np.ndarray:
    """Absolute XY positions reached by chaining per-frame movements from `origin`."""
    return np.asarray(origin[:2], dtype=np.float64) + np.cumsum(np.asarray(movements, dtype=np.float64), axis=0)


def ade_fde(
    forecasts: Sequence[ForecastRecord],
    gt: Sequence[TrackRecord],
    horizon: int,
    match_dist: float = DEFAULT_MATCH_DIST,
) -> PredictionErrors:
    """
    Match forecast origins to ground truth at their origin frame and score the
    first `horizon` steps against that object's future centers.

    Objects without ground truth through origin + horizon are skipped.

    Raises:
        HorizonError: If a forecast is shorter than `horizon`
    """
    if horizon < 1:
        raise HorizonError(f"Horizon must be positive, got {horizon}", "HORIZON_EXCEEDED", {"horizon": horizon})
    centers: Dict[Tuple[int, int], np.ndarray] = {(r.frame, r.id): np.array([r.x, r.y]) for r in gt}
    gt_by_frame: Dict[int, List[TrackRecord]] = {}
    for row in gt:
        gt_by_frame.setdefault(row.frame, []).append(row)
    fc_by_frame: Dict[int, List[ForecastRecord]] = {}
    for fc in forecasts:
        if len(fc.movements) < horizon:
            raise HorizonError(
                f"Forecast of track {fc.id} at frame {fc.frame} has {len(fc.movements)} steps, horizon is {horizon}",
                "HORIZON_EXCEEDED",
                {"frame": fc.frame, "id": fc.id, "steps": len(fc.movements), "horizon": horizon}
            )
        fc_by_frame.setdefault(fc.frame, []).append(fc)

    preds, truths = [], []
    for frame in sorted(fc_by_frame):
        fcs, gts = fc_by_frame[frame], gt_by_frame.get(frame, [])
        if not gts:
            continue
        cost = np.array([[np.hypot(f.x - g.x, f.y - g.y) for g in gts] for f in fcs])
        for i, j in associate(cost, match_dist):
            g = gts[j]
            future = [centers.get((frame + s, g.id)) for s in range(1, horizon + 1)]
            if any(c is None for c in future):
                continue
            preds.append(forecast_positions((fcs[i].x, fcs[i].y), np.array(fcs[i].movements[:horizon])))
            truths.append(np.stack(future))
    if not preds:
        logger.warning(f"No forecast could be scored at horizon {horizon}")
        return PredictionErrors(ade=None, fde=None, samples=0, horizon=horizon)
    ade, fde = displacement_errors(np.stack(preds), np.stack(truths))
    return PredictionErrors(ade=ade, fde=fde, samples=len(preds), horizon=horizon)
