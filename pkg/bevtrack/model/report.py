from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict

AMOTP_NOTE = (
    "AMOTP is the mean over recall targets of the mean matched ground-plane center "
    "distance; targets that no score threshold reaches count as the match cutoff."
)


class ThresholdRow(BaseModel):
    """One recall target of the AMOTA sweep."""
    model_config = ConfigDict(frozen=True)

    recall_target: float
    threshold: Optional[float]
    recall: float
    motar: float
    motp: float
    tp: int
    fp: int
    fn: int
    ids: int


class ClassMetrics(BaseModel):
    """Tracking and prediction metrics for one class or for the aggregate."""
    model_config = ConfigDict(frozen=True)

    amota: float
    amotp: float
    mota: float
    motp: float
    ids: int
    recall: float
    tp: int
    fp: int
    fn: int
    gt: int
    ade: Optional[float] = None
    fde: Optional[float] = None


class MetricsReport(BaseModel):
    """Metrics report written by `eval` and `repro`."""
    model_config = ConfigDict(frozen=True)

    header: str = AMOTP_NOTE
    match_dist: float
    n_recall: int
    horizon: Optional[int] = None
    per_class: Dict[str, ClassMetrics]
    aggregate: ClassMetrics
    thresholds: Dict[str, List[ThresholdRow]] = {}


class RunManifest(BaseModel):
    """Provenance record written next to every output."""
    model_config = ConfigDict(frozen=True)

    command: str
    argv: List[str]
    config_hash: str
    seed: Optional[int]
    inputs: List[str]
    outputs: List[str]
    tool_version: str
    wall_clock: str
    run_id: str
