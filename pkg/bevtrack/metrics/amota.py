"""
Recall-averaged tracking accuracy (AMOTA) and precision (AMOTP).

Recall targets are r_k = k/n for k = 1..n. A full-log matching assigns
every matched prediction its score; the recall reached at score s is the
share of ground truth matched by predictions scoring at least s. Each
target takes the highest score reaching it as its threshold, the log is
re-evaluated at that threshold and

    MOTAR = 1 - (IDS + FP + FN - (1 - r) P) / (r P),  clamped to [0, 1].

Targets that no threshold reaches count as MOTAR 0 and as the matching
cutoff for AMOTP.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from bevtrack.errors import LogFormatError
from bevtrack.metrics.clear_mot import DEFAULT_MATCH_DIST, MotTally, clear_mot
from bevtrack.model.records import TrackRecord
from bevtrack.model.report import ThresholdRow

logger = logging.getLogger(__name__)

DEFAULT_N_RECALL = 40


class AmotaResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    amota: float
    amotp: float
    thresholds: List[ThresholdRow]


def score_match_curve(gt: Sequence[TrackRecord], pred: Sequence[TrackRecord], match_dist: float) -> List[Tuple[float, int]]:
    """(score, ground truth matched by predictions scoring at least it) for every distinct score, descending."""
    matched = np.array([m.score for m in clear_mot(gt, pred, match_dist).matches])
    return [(s, int(np.count_nonzero(matched >= s))) for s in sorted({p.score for p in pred}, reverse=True)]


def motar(ids: int, fp: int, fn: int, gt: int, r: float) -> float:
    value = 1.0 - (ids + fp + fn - (1.0 - r) * gt) / (r * gt)
    return min(1.0, max(0.0, value))


def amota(
    gt: Sequence[TrackRecord],
    pred: Sequence[TrackRecord],
    n_recall: int = DEFAULT_N_RECALL,
    match_dist: float = DEFAULT_MATCH_DIST,
) -> AmotaResult:
    """
    Sweep recall targets and average MOTAR and matched distance.

    Raises:
        LogFormatError: If a prediction carries a non-finite score
    """
    if any(not np.isfinite(p.score) for p in pred):
        raise LogFormatError("Every prediction needs a finite score for AMOTA", "MALFORMED_LOG")
    curve = score_match_curve(gt, pred, match_dist)
    n_gt = len(gt)
    rows: List[ThresholdRow] = []
    tallies: Dict[float, MotTally] = {}
    for k in range(1, n_recall + 1):
        r = k / n_recall
        # reached when matched / P >= k / n, compared in integers
        threshold: Optional[float] = next((s for s, matched in curve if matched * n_recall >= k * n_gt), None)
        if threshold is None or not n_gt:
            rows.append(ThresholdRow(
                recall_target=float(r), threshold=None, recall=0.0, motar=0.0, motp=match_dist,
                tp=0, fp=0, fn=n_gt, ids=0,
            ))
            continue
        if threshold not in tallies:
            tallies[threshold] = clear_mot(gt, pred, match_dist, min_score=threshold)
        tally = tallies[threshold]
        rows.append(ThresholdRow(
            recall_target=float(r), threshold=threshold, recall=tally.recall,
            motar=motar(tally.ids, tally.fp, tally.fn, tally.gt, float(r)),
            motp=tally.motp if tally.motp is not None else match_dist,
            tp=tally.tp, fp=tally.fp, fn=tally.fn, ids=tally.ids,
        ))
    result = AmotaResult(
        amota=float(np.mean([row.motar for row in rows])),
        amotp=float(np.mean([row.motp for row in rows])),
        thresholds=rows,
    )
    logger.debug(f"AMOTA {result.amota:.4f}, AMOTP {result.amotp:.4f} over {n_recall} recall targets")
    return result
