"""
Static bird's-eye-view and sweep plots as deterministic SVG files.
"""
import io
import logging
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from bevtrack.core.jsonl import PathLike, write_text  # noqa: E402
from bevtrack.model.records import TrackRecord  # noqa: E402

logger = logging.getLogger(__name__)

SVG_SALT = "bevtrack"


def _save_svg(fig, path: PathLike) -> None:
    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    write_text(path, buffer.getvalue().decode("utf-8"))
    logger.info(f"Wrote plot {path}")


def _paths(rows: Sequence[TrackRecord], last_frame: Optional[int]) -> Dict[int, List[TrackRecord]]:
    paths: Dict[int, List[TrackRecord]] = {}
    for row in sorted(rows, key=lambda r: (r.id, r.frame)):
        if last_frame is None or row.frame <= last_frame:
            paths.setdefault(row.id, []).append(row)
    return paths


def plot_bev(
    gt: Sequence[TrackRecord],
    pred: Sequence[TrackRecord],
    path: PathLike,
    last_frame: Optional[int] = None,
    title: str = "",
) -> None:
    """
    Ground-truth paths in grey and predicted tracks colored by id, up to
    `last_frame`, with the final position of each track marked and labelled.
    """
    fig, ax = plt.subplots(figsize=(7, 7))
    for rows in _paths(gt, last_frame).values():
        ax.plot([r.x for r in rows], [r.y for r in rows], color="0.75", linewidth=3.0, zorder=1)
    cmap = plt.get_cmap("tab20")
    for track_id, rows in _paths(pred, last_frame).items():
        color = cmap(track_id % cmap.N)
        ax.plot([r.x for r in rows], [r.y for r in rows], color=color, linewidth=1.2, marker=".", markersize=3, zorder=2)
        ax.annotate(str(track_id), (rows[-1].x, rows[-1].y), fontsize=7, color=color)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title or "BEV tracks")
    ax.grid(True, linewidth=0.3)
    _save_svg(fig, path)


def plot_sweep(
    xs: Sequence[float],
    series: Dict[str, Sequence[float]],
    path: PathLike,
    xlabel: str,
    ylabel: str,
    title: str = "",
) -> None:
    """One line per named series over shared x values."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(series):
        ax.plot(list(xs), list(series[name]), marker="o", label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    ax.legend()
    _save_svg(fig, path)
