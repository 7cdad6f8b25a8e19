"""
CLEAR-MOT tallies on ground-plane center distance.

Per frame, pairs matched in the previous frame are kept while they stay
within the cutoff; the remaining objects are assigned by Hungarian matching.
An identity switch is counted when a ground-truth object is matched to a
different prediction id than at its last match.
"""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from bevtrack.baselines.association import associate
from bevtrack.errors import LogFormatError
from bevtrack.model.records import TrackRecord

logger = logging.getLogger(__name__)

DEFAULT_MATCH_DIST = 2.0


class MatchRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    frame: int
    gt_id: int
    pred_id: int
    distance: float
    score: float


class MotTally(BaseModel):
    """Accumulated CLEAR-MOT counts for one or more sequences."""
    model_config = ConfigDict(frozen=True)

    tp: int = 0
    fp: int = 0
    fn: int = 0
    ids: int = 0
    gt: int = 0
    distance_sum: float = 0.0
    matches: Tuple[MatchRecord, ...] = ()

    @property
    def recall(self) -> float:
        return self.tp / self.gt if self.gt else 0.0

    @property
    def mota(self) -> float:
        return 1.0 - (self.fn + self.fp + self.ids) / self.gt if self.gt else 0.0

    @property
    def motp(self) -> Optional[float]:
        """Mean matched center distance; None without matches."""
        return self.distance_sum / self.tp if self.tp else None

    def __add__(self, other: "MotTally") -> "MotTally":
        return MotTally(
            tp=self.tp + other.tp, fp=self.fp + other.fp, fn=self.fn + other.fn,
            ids=self.ids + other.ids, gt=self.gt + other.gt,
            distance_sum=self.distance_sum + other.distance_sum,
            matches=self.matches + other.matches,
        )


def index_by_frame(rows: Iterable[TrackRecord], what: str = "log") -> Dict[int, List[TrackRecord]]:
    """
    Group rows by frame.

    Raises:
        LogFormatError: If a (frame, id) pair occurs twice
    """
    frames: Dict[int, List[TrackRecord]] = defaultdict(list)
    seen = set()
    for row in rows:
        key = (row.frame, row.id)
        if key in seen:
            raise LogFormatError(
                f"Duplicate row for frame {row.frame}, id {row.id} in {what}",
                "DUPLICATE_ROW",
                {"frame": row.frame, "id": row.id, "log": what}
            )
        seen.add(key)
        frames[row.frame].append(row)
    return frames


def _distance(a: TrackRecord, b: TrackRecord) -> float:
    return float(np.hypot(a.x - b.x, a.y - b.y))


def clear_mot(
    gt: Sequence[TrackRecord],
    pred: Sequence[TrackRecord],
    match_dist: float = DEFAULT_MATCH_DIST,
    min_score: Optional[float] = None,
) -> MotTally:
    """
    Tally TP/FP/FN/IDS of a prediction log against ground truth.

    Args:
        gt: Ground-truth track log
        pred: Predicted track log
        match_dist: Matching cutoff on ground-plane center distance (m)
        min_score: If set, predictions scoring below it are ignored

    Raises:
        LogFormatError: On duplicate (frame, id) rows in either log
    """
    gt_frames = index_by_frame(gt, "ground truth")
    pred_frames = index_by_frame(pred, "predictions")
    previous: Dict[int, int] = {}
    last_match: Dict[int, int] = {}
    tp = fp = fn = ids = n_gt = 0
    distance_sum = 0.0
    matches: List[MatchRecord] = []

    for frame in sorted(set(gt_frames) | set(pred_frames)):
        gts = gt_frames.get(frame, [])
        preds = [p for p in pred_frames.get(frame, []) if min_score is None or p.score >= min_score]
        pred_by_id = {p.id: p for p in preds}
        pairs: List[Tuple[TrackRecord, TrackRecord]] = []
        taken_pred = set()

        for g in gts:
            p = pred_by_id.get(previous.get(g.id, -1))
            if p is not None and p.id not in taken_pred and p.class_id == g.class_id and _distance(g, p) < match_dist:
                pairs.append((g, p))
                taken_pred.add(p.id)

        kept_gt = {g.id for g, _ in pairs}
        open_gt = [g for g in gts if g.id not in kept_gt]
        open_pred = [p for p in preds if p.id not in taken_pred]
        cost = np.full((len(open_gt), len(open_pred)), np.inf)
        for i, g in enumerate(open_gt):
            for j, p in enumerate(open_pred):
                if g.class_id == p.class_id:
                    cost[i, j] = _distance(g, p)
        pairs.extend((open_gt[i], open_pred[j]) for i, j in associate(cost, match_dist))

        current: Dict[int, int] = {}
        for g, p in pairs:
            if g.id in last_match and last_match[g.id] != p.id:
                ids += 1
            last_match[g.id] = p.id
            current[g.id] = p.id
            dist = _distance(g, p)
            distance_sum += dist
            matches.append(MatchRecord(frame=frame, gt_id=g.id, pred_id=p.id, distance=dist, score=p.score))
        previous = current
        tp += len(pairs)
        fp += len(preds) - len(pairs)
        fn += len(gts) - len(pairs)
        n_gt += len(gts)

    return MotTally(tp=tp, fp=fp, fn=fn, ids=ids, gt=n_gt, distance_sum=distance_sum, matches=tuple(matches))
