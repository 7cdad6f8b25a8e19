"""
Training samples harvested from tracker runs over simulated scenarios.

Tracker boxes are matched to ground truth within 2.0 m by Hungarian
matching each frame. A motion sample at frame t needs the track's queue to
cover frames t - tau_h + 1 .. t and the matched object's ground truth
through t + tau_f. Its target movements start from the track's own center
at t: the first step reaches the object's ground truth at t + 1 and the
rest are per-frame ground-truth displacements, so their prefix sums are
the positions a forecast emitted at t is scored against.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence

import numpy as np

from bevtrack.baselines.association import associate
from bevtrack.core.jsonl import group_by_frame
from bevtrack.future.motion import MotionInputs
from bevtrack.model.config import TrackerConfig
from bevtrack.model.geometry import Box3D
from bevtrack.model.records import TrackRecord
from bevtrack.model.scenario import ScenarioConfig
from bevtrack.model.tracking import TrackerState
from bevtrack.simulator.world import simulate
from bevtrack.tracker.engine import step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainSample:
    """Motion-head inputs of one matched track at one frame, its XY center and its target movements."""
    inputs: MotionInputs
    target: np.ndarray
    origin: np.ndarray


@dataclass(frozen=True)
class RefineSample:
    """Refined query feature, stub box and supervision for the refinement head."""
    feature: np.ndarray
    stub: Box3D
    label: int
    residual: np.ndarray


@dataclass
class Dataset:
    motion: List[TrainSample] = field(default_factory=list)
    refine: List[RefineSample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.motion)


def _match(centers: Dict[int, np.ndarray], gts: List[TrackRecord], match_dist: float) -> Dict[int, TrackRecord]:
    ids = sorted(centers)
    if not ids or not gts:
        return {}
    cost = np.array([[np.hypot(centers[i][0] - g.x, centers[i][1] - g.y) for g in gts] for i in ids])
    return {ids[r]: gts[c] for r, c in associate(cost, match_dist)}


def _scenario_samples(
    scenario: ScenarioConfig,
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    match_dist: float,
    dataset: Dataset,
) -> None:
    sim = simulate(scenario, d=config.d)
    gt_centers = {(r.frame, r.id): np.array([r.x, r.y, r.z]) for r in sim.gt}
    gt_by_frame: Dict[int, List[TrackRecord]] = {}
    for row in sim.gt:
        gt_by_frame.setdefault(row.frame, []).append(row)

    state = TrackerState()
    for frame in group_by_frame(sim.detections, scenario.frames - 1):
        stepped = step(state, frame, params, config)
        state = stepped.state
        t = frame.frame
        gts = gt_by_frame.get(t, [])

        stubs = {i: np.asarray(stub.center[:2]) for i, (_, stub) in stepped.refine_inputs.items()}
        refine_matches = _match(stubs, gts, match_dist)
        for track_id, (query, stub) in sorted(stepped.refine_inputs.items()):
            g = refine_matches.get(track_id)
            residual = np.zeros(3) if g is None else gt_centers[(t, g.id)] - np.asarray(stub.center)
            dataset.refine.append(RefineSample(feature=query.feature_array, stub=stub, label=int(g is not None), residual=residual))

        centers = {i: np.asarray(box.center[:2]) for i, box in stepped.boxes if i in stepped.motion_inputs}
        for track_id, g in sorted(_match(centers, gts, match_dist).items()):
            inputs = stepped.motion_inputs[track_id]
            if not inputs.mask[1:].all():
                continue
            future = [gt_centers.get((t + s, g.id)) for s in range(config.tau_f + 1)]
            if any(c is None for c in future):
                continue
            path = np.vstack([centers[track_id], np.stack(future[1:])[:, :2]])
            target = np.diff(path, axis=0)
            dataset.motion.append(TrainSample(inputs=inputs, target=target, origin=centers[track_id]))


def build_dataset(
    scenarios: Sequence[ScenarioConfig],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    match_dist: float = 2.0,
) -> Dataset:
    """Run the tracker over each scenario and harvest matched samples, in scenario order."""
    dataset = Dataset()
    for scenario in scenarios:
        _scenario_samples(scenario, params, config, match_dist, dataset)
    logger.info(f"Built {len(dataset.motion)} motion samples and {len(dataset.refine)} refinement samples from {len(scenarios)} scenarios")
    return dataset
