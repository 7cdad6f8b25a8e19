import csv
import io
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from bevtrack.metrics.amota import DEFAULT_N_RECALL, amota
from bevtrack.metrics.clear_mot import DEFAULT_MATCH_DIST, clear_mot
from bevtrack.metrics.prediction import ade_fde
from bevtrack.model.records import ForecastRecord, TrackRecord
from bevtrack.model.report import ClassMetrics, MetricsReport

logger = logging.getLogger(__name__)

Sequence3 = Tuple[Sequence[TrackRecord], Sequence[TrackRecord], Sequence[ForecastRecord]]


def concat_sequences(
    sequences: Sequence[Sequence3],
    frame_counts: Optional[Sequence[int]] = None,
) -> Tuple[List[TrackRecord], List[TrackRecord], List[ForecastRecord]]:
    """
    Merge several sequences into one log pair by shifting frames and ids
    so that no frame or id is shared between sequences.

    With `frame_counts` the frame shift depends only on sequence lengths,
    so logs merged in separate calls stay frame-aligned.
    """
    gt_all: List[TrackRecord] = []
    pred_all: List[TrackRecord] = []
    fc_all: List[ForecastRecord] = []
    frame_offset = id_offset = 0
    for k, (gt, pred, forecasts) in enumerate(sequences):
        rows = list(gt) + list(pred)
        if frame_counts is not None:
            last_frame = frame_counts[k] - 1
        else:
            last_frame = max((r.frame for r in rows), default=-1)
        last_id = max((r.id for r in rows), default=-1)
        gt_all.extend(r.model_copy(update={"frame": r.frame + frame_offset, "id": r.id + id_offset}) for r in gt)
        pred_all.extend(r.model_copy(update={"frame": r.frame + frame_offset, "id": r.id + id_offset}) for r in pred)
        fc_all.extend(f.model_copy(update={"frame": f.frame + frame_offset, "id": f.id + id_offset}) for f in forecasts)
        # one empty frame between sequences
        frame_offset += last_frame + 2
        id_offset += last_id + 1
    return gt_all, pred_all, fc_all


def class_metrics(
    gt: Sequence[TrackRecord],
    pred: Sequence[TrackRecord],
    match_dist: float,
    n_recall: int,
) -> Tuple[ClassMetrics, list]:
    tally = clear_mot(gt, pred, match_dist)
    sweep = amota(gt, pred, n_recall, match_dist)
    metrics = ClassMetrics(
        amota=sweep.amota, amotp=sweep.amotp, mota=tally.mota,
        motp=tally.motp if tally.motp is not None else match_dist,
        ids=tally.ids, recall=tally.recall, tp=tally.tp, fp=tally.fp, fn=tally.fn, gt=tally.gt,
    )
    return metrics, sweep.thresholds


def build_report(
    gt: Sequence[TrackRecord],
    pred: Sequence[TrackRecord],
    forecasts: Optional[Sequence[ForecastRecord]] = None,
    match_dist: float = DEFAULT_MATCH_DIST,
    n_recall: int = DEFAULT_N_RECALL,
    horizon: Optional[int] = None,
) -> MetricsReport:
    """
    Per-class and aggregate tracking metrics, plus ADE/FDE when forecasts
    and a horizon are given.

    The aggregate averages AMOTA, AMOTP, MOTA and MOTP over classes and sums counts.
    """
    classes = sorted({r.class_id for r in gt})
    ignored = sorted({r.class_id for r in pred} - set(classes))
    if ignored:
        logger.warning(f"Predicted classes {ignored} have no ground truth and are not scored")

    per_class: Dict[str, ClassMetrics] = {}
    thresholds = {}
    for cls in classes:
        metrics, rows = class_metrics(
            [r for r in gt if r.class_id == cls], [r for r in pred if r.class_id == cls], match_dist, n_recall
        )
        per_class[str(cls)] = metrics
        thresholds[str(cls)] = rows

    ade = fde = None
    if forecasts is not None and horizon is not None:
        errors = ade_fde(forecasts, gt, horizon, match_dist)
        ade, fde = errors.ade, errors.fde

    values = list(per_class.values())
    tp, fp, fn, ids, n_gt = (sum(getattr(m, k) for m in values) for k in ("tp", "fp", "fn", "ids", "gt"))
    aggregate = ClassMetrics(
        amota=float(np.mean([m.amota for m in values])) if values else 0.0,
        amotp=float(np.mean([m.amotp for m in values])) if values else match_dist,
        mota=float(np.mean([m.mota for m in values])) if values else 0.0,
        motp=float(np.mean([m.motp for m in values])) if values else match_dist,
        ids=ids, recall=tp / n_gt if n_gt else 0.0, tp=tp, fp=fp, fn=fn, gt=n_gt, ade=ade, fde=fde,
    )
    return MetricsReport(
        match_dist=match_dist, n_recall=n_recall, horizon=horizon,
        per_class=per_class, aggregate=aggregate, thresholds=thresholds,
    )


def thresholds_csv(report: MetricsReport) -> str:
    """Per-threshold table of every class as CSV."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["class", "recall_target", "threshold", "recall", "motar", "motp", "tp", "fp", "fn", "ids"])
    for cls, rows in report.thresholds.items():
        for row in rows:
            writer.writerow([
                cls, f"{row.recall_target:.4f}", "" if row.threshold is None else repr(row.threshold),
                f"{row.recall:.6f}", f"{row.motar:.6f}", f"{row.motp:.6f}", row.tp, row.fp, row.fn, row.ids,
            ])
    return buffer.getvalue()
