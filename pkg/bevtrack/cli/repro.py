"""
End-to-end ablation run: train the toy heads, simulate every suite, track
with every mode, evaluate, and emit the tables, sweeps and plots.

Everything written here is a pure function of the seed and the configs.
"""
import csv
import io
import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from bevtrack.cli.plotting import plot_bev, plot_sweep
from bevtrack.cli.pool import ordered_map
from bevtrack.core.jsonl import dump_records, write_text, write_weights
from bevtrack.metrics.prediction import ade_fde
from bevtrack.metrics.report import build_report, concat_sequences
from bevtrack.model.config import BaselineConfig, TrackerConfig, TrainConfig
from bevtrack.model.records import DetectionRecord, ForecastRecord, TrackRecord
from bevtrack.model.report import MetricsReport
from bevtrack.model.scenario import ScenarioConfig
from bevtrack.nn.params import init_params
from bevtrack.simulator.suites import scenario_suite
from bevtrack.simulator.world import SimulationResult, simulate
from bevtrack.tracker.engine import SequenceResult
from bevtrack.tracker.modes import run_mode
from bevtrack.training.baseline import velocity_forecast_baseline
from bevtrack.training.dataset import Dataset, build_dataset
from bevtrack.training.trainer import TrainResult, train_motion_head, train_refine_head

logger = logging.getLogger(__name__)

SUITE_COUNTS = {"occlusion": 50, "turning": 20, "crowded": 10, "handoff": 10}
TRAIN_SUITES = ("turning", "occlusion", "crowded")
TRAIN_COUNT = 6
TRAIN_SEED_OFFSET = 1000
EXTENSION_SWEEP = tuple(range(7))
HORIZONS = (2, 4, 6, 8)
PREDICTION_LENGTHS = (4, 6, 8)
PREDICTION_LENGTH_SUITES = ("occlusion", "turning")
LAMBDA_F_SWEEP = (0.25, 0.5, 1.0)

Params = Dict[str, np.ndarray]
Logs = Tuple[List[TrackRecord], List[TrackRecord], List[ForecastRecord]]


@dataclass(frozen=True)
class Variant:
    """A tracker mode plus config overrides, reported under `name`."""
    name: str
    mode: str
    overrides: Mapping[str, object] = field(default_factory=dict)

    def config(self, base: TrackerConfig) -> TrackerConfig:
        return base.model_copy(update=dict(self.overrides)) if self.overrides else base


VARIANTS = (
    Variant("query", "query"),
    Variant("query-no-ext", "query-no-ext"),
    Variant("query-no-past", "query", {"use_cross_frame": False, "use_cross_object": False, "use_track_refinement": False}),
    Variant("query-no-cross-frame", "query", {"use_cross_frame": False}),
    Variant("query-no-cross-object", "query", {"use_cross_object": False}),
    Variant("velocity", "velocity"),
    Variant("velocity-no-ext", "velocity", {"tau_e": 0}),
    Variant("tbd-hungarian", "tbd-hungarian"),
    Variant("tbd-greedy", "tbd-greedy"),
)


@dataclass(frozen=True)
class TrackJob:
    mode: str
    detections: Tuple[DetectionRecord, ...]
    last_frame: int
    params: Params
    config: TrackerConfig
    baseline: BaselineConfig


def run_track_job(job: TrackJob) -> SequenceResult:
    return run_mode(job.mode, job.detections, job.params, job.config, job.baseline, job.last_frame)


def _dataset_of(scenario: ScenarioConfig, params: Params, config: TrackerConfig, match_dist: float) -> Dataset:
    return build_dataset([scenario], params, config, match_dist)


def harvest(scenarios: Sequence[ScenarioConfig], params: Params, config: TrackerConfig, match_dist: float) -> Dataset:
    """build_dataset with one worker task per scenario; sample order follows scenario order."""
    dataset = Dataset()
    for part in ordered_map(partial(_dataset_of, params=params, config=config, match_dist=match_dist), scenarios):
        dataset.motion.extend(part.motion)
        dataset.refine.extend(part.refine)
    logger.info(f"Harvested {len(dataset.motion)} motion samples, {len(dataset.refine)} refinement samples")
    return dataset


def train_weights(
    dataset: Dataset,
    params: Params,
    config: TrackerConfig,
    train: TrainConfig,
) -> Tuple[Params, TrainResult, Optional[TrainResult]]:
    """Train the motion head and, when enabled, the refinement head on top of it."""
    motion = train_motion_head(dataset.motion, params, config, train)
    if not train.train_refine_head:
        return motion.params, motion, None
    refine = train_refine_head(dataset.refine, motion.params, train)
    return refine.params, motion, refine


def track_suite(
    variant: Variant,
    sims: Sequence[SimulationResult],
    scenarios: Sequence[ScenarioConfig],
    params: Params,
    config: TrackerConfig,
    baseline: BaselineConfig,
) -> List[SequenceResult]:
    cfg = variant.config(config)
    jobs = [
        TrackJob(variant.mode, tuple(sim.detections), scenario.frames - 1, params, cfg, baseline)
        for sim, scenario in zip(sims, scenarios)
    ]
    return ordered_map(run_track_job, jobs)


def merge_logs(
    sims: Sequence[SimulationResult],
    scenarios: Sequence[ScenarioConfig],
    results: Optional[Sequence[SequenceResult]] = None,
) -> Logs:
    """Concatenate a suite's logs, frame-aligned across calls by scenario length."""
    if results is None:
        sequences = [(s.gt, [], []) for s in sims]
    else:
        sequences = [(s.gt, r.tracks, r.forecasts) for s, r in zip(sims, results)]
    return concat_sequences(sequences, [s.frames for s in scenarios])


def evaluate(logs: Logs, horizon: Optional[int]) -> MetricsReport:
    gt, pred, forecasts = logs
    if not forecasts:
        return build_report(gt, pred)
    return build_report(gt, pred, forecasts, horizon=horizon)


def constant_velocity_pairs(forecasts: Sequence[ForecastRecord]) -> Tuple[List[ForecastRecord], List[ForecastRecord]]:
    """
    Forecasts whose track has an anchor one frame earlier, and the
    constant-velocity forecasts from the same anchors and of the same length.
    """
    anchors = {(fc.frame, fc.id): (fc.x, fc.y) for fc in forecasts}
    learned, constant = [], []
    for fc in forecasts:
        previous = anchors.get((fc.frame - 1, fc.id))
        if previous is None:
            continue
        cv = velocity_forecast_baseline([previous, (fc.x, fc.y)], len(fc.movements), fc.frame)
        learned.append(fc)
        constant.append(fc.model_copy(update={"movements": [(float(x), float(y)) for x, y in cv.as_array()]}))
    return learned, constant


def _csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _num(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


ABLATION_HEADER = ("suite", "variant", "amota", "amotp", "mota", "motp", "ids", "recall", "fp", "fn", "ade", "fde")


def ablation_row(suite: str, name: str, report: MetricsReport) -> List[object]:
    m = report.aggregate
    return [
        suite, name, _num(m.amota), _num(m.amotp), _num(m.mota), _num(m.motp), m.ids,
        _num(m.recall), m.fp, m.fn, _num(m.ade), _num(m.fde),
    ]


@dataclass
class ReproResult:
    reports: Dict[Tuple[str, str], MetricsReport] = field(default_factory=dict)
    extension_ids: Dict[int, int] = field(default_factory=dict)
    horizon_errors: Dict[Tuple[str, int], Tuple[Optional[float], Optional[float]]] = field(default_factory=dict)
    prediction_lengths: Dict[Tuple[int, str], MetricsReport] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)


def run_repro(
    out: Path,
    seed: int,
    config: TrackerConfig = TrackerConfig(),
    baseline: BaselineConfig = BaselineConfig(),
    train: TrainConfig = TrainConfig(train_refine_head=True),
    counts: Optional[Mapping[str, int]] = None,
    lambda_f_sweep: bool = False,
    run_id: str = "repro",
) -> ReproResult:
    """
    Regenerate the full ablation table under `out`.

    Args:
        out: Output directory
        seed: Master seed for weights, training scenarios and evaluation suites
        config: Tracker configuration shared by every query-based variant
        baseline: Tracking-by-detection settings
        train: Toy-training settings
        counts: Scenarios per suite, overriding SUITE_COUNTS
        lambda_f_sweep: Also retrain and evaluate the motion head under each motion-loss weight
        run_id: Log correlation prefix
    """
    counts = dict(SUITE_COUNTS, **(counts or {}))
    result = ReproResult()
    out.mkdir(parents=True, exist_ok=True)

    def emit(name: str, text: str) -> None:
        write_text(out / name, text)
        result.outputs.append(out / name)

    logger.info(f"[{run_id}] Training toy heads")
    train_scenarios = [s for name in TRAIN_SUITES for s in scenario_suite(name, TRAIN_COUNT, seed + TRAIN_SEED_OFFSET)]
    initial = init_params(config, seed)
    dataset = harvest(train_scenarios, initial, config, train.match_dist)
    params, motion, refine = train_weights(dataset, initial, config, train)
    write_weights(out / "weights.json", params)
    result.outputs.append(out / "weights.json")
    emit("loss_motion.csv", motion.loss_csv())
    if refine is not None:
        emit("loss_refine.csv", refine.loss_csv())

    suites = {name: scenario_suite(name, counts[name], seed) for name in SUITE_COUNTS}
    sims = {name: ordered_map(partial(simulate, d=config.d), scenarios) for name, scenarios in suites.items()}
    horizon = min(max(HORIZONS), config.tau_f)

    rows = []
    logs: Dict[Tuple[str, str], Logs] = {}
    first_results: Dict[Tuple[str, str], SequenceResult] = {}
    for suite, scenarios in suites.items():
        gt, _, _ = merge_logs(sims[suite], scenarios)
        emit(f"{suite}/gt.jsonl", dump_records(gt))
        for variant in VARIANTS:
            logger.info(f"[{run_id}] Tracking {suite} with {variant.name}")
            results = track_suite(variant, sims[suite], scenarios, params, config, baseline)
            first_results[(suite, variant.name)] = results[0]
            merged = logs[(suite, variant.name)] = merge_logs(sims[suite], scenarios, results)
            report = result.reports[(suite, variant.name)] = evaluate(merged, horizon)
            emit(f"{suite}/{variant.name}.tracks.jsonl", dump_records(merged[1]))
            if merged[2]:
                emit(f"{suite}/{variant.name}.forecasts.jsonl", dump_records(merged[2]))
            emit(f"{suite}/{variant.name}.report.json", report.model_dump_json(indent=2) + "\n")
            rows.append(ablation_row(suite, variant.name, report))
    emit("ablation.csv", _csv(ABLATION_HEADER, rows))

    # extension-length sweep on the occlusion suite
    sweep_rows = []
    for tau_e in EXTENSION_SWEEP:
        if tau_e >= config.tau_f:
            logger.warning(f"[{run_id}] Skipping tau_e={tau_e}: not below tau_f={config.tau_f}")
            continue
        variant = Variant(f"query-tau-e-{tau_e}", "query", {"tau_e": tau_e})
        results = track_suite(variant, sims["occlusion"], suites["occlusion"], params, config, baseline)
        report = evaluate(merge_logs(sims["occlusion"], suites["occlusion"], results), None)
        result.extension_ids[tau_e] = report.aggregate.ids
        sweep_rows.append([tau_e, report.aggregate.ids, _num(report.aggregate.amota)])
    emit("extension_sweep.csv", _csv(("tau_e", "ids", "amota"), sweep_rows))
    plot_sweep(
        [r[0] for r in sweep_rows], {"IDS": [r[1] for r in sweep_rows]},
        out / "extension_sweep.svg", "extension length tau_e [frames]", "ID switches", "occlusion suite",
    )
    result.outputs.append(out / "extension_sweep.svg")

    # prediction horizons on the turning suite: learned forecasts against constant
    # velocity from the same anchors, and against the velocity tracking mode
    horizon_rows = []
    gt, _, forecasts = logs[("turning", "query")]
    learned, constant = constant_velocity_pairs(forecasts)
    _, _, velocity_forecasts = logs[("turning", "velocity")]
    for h in HORIZONS:
        if h > config.tau_f:
            continue
        row: List[object] = [h]
        for name, records in (("query", learned), ("cv", constant)):
            errors = ade_fde(records, gt, h)
            result.horizon_errors[(name, h)] = (errors.ade, errors.fde)
            row += [_num(errors.ade), _num(errors.fde)]
        row.append(errors.samples)
        errors = ade_fde(velocity_forecasts, gt, h)
        result.horizon_errors[("velocity", h)] = (errors.ade, errors.fde)
        horizon_rows.append(row + [_num(errors.ade), _num(errors.fde), errors.samples])
    emit("horizons.csv", _csv(
        ("horizon", "query_ade", "query_fde", "cv_ade", "cv_fde", "samples",
         "velocity_ade", "velocity_fde", "velocity_samples"),
        horizon_rows,
    ))

    # forecast length: retrain and track with every tau_f
    length_rows = []
    for tau_f in PREDICTION_LENGTHS:
        cfg = config.model_copy(update={"tau_f": tau_f, "tau_e": min(config.tau_e, tau_f - 1)})
        if tau_f == config.tau_f:
            swept_params = params
        else:
            logger.info(f"[{run_id}] Retraining for tau_f={tau_f}")
            swept_initial = init_params(cfg, seed)
            swept_data = harvest(train_scenarios, swept_initial, cfg, train.match_dist)
            swept_params, _, _ = train_weights(swept_data, swept_initial, cfg, train)
        for suite in PREDICTION_LENGTH_SUITES:
            if tau_f == config.tau_f:
                report = result.reports[(suite, "query")]
            else:
                results = track_suite(VARIANTS[0], sims[suite], suites[suite], swept_params, cfg, baseline)
                report = evaluate(merge_logs(sims[suite], suites[suite], results), min(max(HORIZONS), tau_f))
            result.prediction_lengths[(tau_f, suite)] = report
            m = report.aggregate
            length_rows.append([
                tau_f, cfg.tau_e, suite, _num(m.amota), _num(m.amotp), m.ids, _num(m.ade), _num(m.fde),
            ])
    emit("prediction_length.csv", _csv(
        ("tau_f", "tau_e", "suite", "amota", "amotp", "ids", "ade", "fde"), length_rows,
    ))

    if lambda_f_sweep:
        lambda_rows = []
        for lambda_f in LAMBDA_F_SWEEP:
            swept = train.model_copy(update={"loss": train.loss.model_copy(update={"lambda_f": lambda_f})})
            trained = train_motion_head(dataset.motion, initial, config, swept)
            results = track_suite(VARIANTS[0], sims["turning"], suites["turning"], trained.params, config, baseline)
            report = evaluate(merge_logs(sims["turning"], suites["turning"], results), horizon)
            lambda_rows.append([
                lambda_f, _num(trained.final_loss), _num(report.aggregate.amota),
                _num(report.aggregate.ade), _num(report.aggregate.fde),
            ])
        emit("lambda_f_sweep.csv", _csv(("lambda_f", "final_loss", "amota", "ade", "fde"), lambda_rows))

    plot_bev(
        sims["occlusion"][0].gt, first_results[("occlusion", "query")].tracks,
        out / "bev_occlusion.svg", title=suites["occlusion"][0].name,
    )
    result.outputs.append(out / "bev_occlusion.svg")
    logger.info(f"[{run_id}] Wrote {len(result.outputs)} outputs under {out}")
    return result
