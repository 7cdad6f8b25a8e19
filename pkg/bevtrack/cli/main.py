"""
Command-line entry point: simulate, track, eval, bench, train, plot and repro.

Exit codes: 0 on success, 2 on usage or configuration errors (including
missing inputs, malformed logs and incompatible weights), 1 otherwise.
"""
import argparse
import csv
import io
import logging
import sys
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence

from bevtrack import __version__
from bevtrack.cli.manifest import config_hash, make_run_id, write_manifest
from bevtrack.cli.plotting import plot_bev
from bevtrack.cli.pool import ordered_map
from bevtrack.cli.repro import SUITE_COUNTS, harvest, run_repro, train_weights
from bevtrack.core.jsonl import (
    dump_records, encode_weights, load_model, read_detections, read_forecasts, read_tracks, read_weights, write_text,
    write_weights,
)
from bevtrack.errors import BevTrackError, ConfigError, LogFormatError, ShapeError
from bevtrack.log import configure_logging
from bevtrack.metrics.report import build_report, thresholds_csv
from bevtrack.model.config import BaselineConfig, TrackerConfig, TrainConfig
from bevtrack.model.scenario import ScenarioConfig
from bevtrack.nn.params import init_params
from bevtrack.past.reasoning import flop_compare
from bevtrack.simulator.suites import SUITES, scenario_suite
from bevtrack.simulator.world import simulate
from bevtrack.tracker.modes import MODE_ALIASES, MODES, run_mode

logger = logging.getLogger(__name__)

USAGE_ERRORS = (ConfigError, LogFormatError, ShapeError)
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _tracker_config(path: Optional[str]) -> TrackerConfig:
    return load_model(path, TrackerConfig) if path else TrackerConfig()


def _baseline_config(path: Optional[str]) -> BaselineConfig:
    return load_model(path, BaselineConfig) if path else BaselineConfig()


def _train_config(args) -> TrainConfig:
    train = load_model(args.train_config, TrainConfig) if args.train_config else TrainConfig()
    updates = {k: v for k, v in (("steps", args.steps), ("lr", args.lr), ("seed", args.seed)) if v is not None}
    if args.refine:
        updates["train_refine_head"] = True
    if args.lambda_f is not None:
        updates["loss"] = train.loss.model_copy(update={"lambda_f": args.lambda_f})
    return train.model_copy(update=updates)


def _params(args, config: TrackerConfig):
    return read_weights(args.weights) if args.weights else init_params(config, args.seed)


def cmd_simulate(args) -> int:
    if args.scenario:
        scenarios = [load_model(args.scenario, ScenarioConfig)]
        inputs = [args.scenario]
    else:
        scenarios = scenario_suite(args.suite, args.count, args.seed or 0, args.frames)
        inputs = []
    seed = args.seed if args.scenario else None
    digest = config_hash(*scenarios, args.d, seed)
    run_id = make_run_id("simulate", digest, args.seed)
    out = Path(args.out)
    results = ordered_map(partial(simulate, d=args.d, seed=seed), scenarios)
    outputs = []
    for scenario, sim in zip(scenarios, results):
        target = out / scenario.name
        write_text(target / "scenario.json", scenario.model_dump_json(indent=2) + "\n")
        write_text(target / "gt.jsonl", sim.gt_log)
        write_text(target / "detections.jsonl", sim.detections_log)
        write_text(target / "handoffs.jsonl", dump_records(sim.handoffs))
        outputs.append(target)
    write_manifest(out, "simulate", args.argv, digest, args.seed, inputs, outputs)
    logger.info(f"[{run_id}] Simulated {len(scenarios)} scenarios into {out}")
    return EXIT_OK


def cmd_track(args) -> int:
    config = _tracker_config(args.config)
    baseline = _baseline_config(args.baseline_config)
    detections = read_detections(args.detections)
    params = None if args.mode.startswith("tbd-") else _params(args, config)
    digest = config_hash(config, baseline, args.mode, encode_weights(params) if params else None, args.seed)
    run_id = make_run_id("track", digest, args.seed)
    logger.info(f"[{run_id}] Tracking {args.detections} with mode {args.mode}")
    result = run_mode(args.mode, detections, params, config, baseline, args.last_frame)
    write_text(args.out, result.track_log)
    outputs = [args.out]
    if args.forecasts:
        write_text(args.forecasts, result.forecast_log)
        outputs.append(args.forecasts)
    inputs = [p for p in (args.detections, args.weights, args.config, args.baseline_config) if p]
    write_manifest(args.out, "track", args.argv, digest, args.seed, inputs, outputs)
    return EXIT_OK


def cmd_eval(args) -> int:
    gt = read_tracks(args.gt)
    pred = read_tracks(args.pred)
    forecasts = read_forecasts(args.forecasts) if args.forecasts else None
    report = build_report(gt, pred, forecasts, args.match_dist, args.n_recall, args.horizon if forecasts else None)
    write_text(args.report, report.model_dump_json(indent=2) + "\n")
    outputs = [args.report]
    if args.thresholds_csv:
        write_text(args.thresholds_csv, thresholds_csv(report))
        outputs.append(args.thresholds_csv)
    digest = config_hash({"match_dist": args.match_dist, "n_recall": args.n_recall, "horizon": args.horizon})
    inputs = [p for p in (args.gt, args.pred, args.forecasts) if p]
    write_manifest(args.report, "eval", args.argv, digest, None, inputs, outputs)
    m = report.aggregate
    print(f"AMOTA {m.amota:.4f}  AMOTP {m.amotp:.4f}  MOTA {m.mota:.4f}  IDS {m.ids}  recall {m.recall:.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["n", "tau", "d", "global_attn", "decoupled_attn", "ratio", "global_total", "decoupled_total"])
    for n in args.n:
        for tau in args.tau:
            c = flop_compare(n, tau, args.d, args.heads)
            writer.writerow([n, tau, args.d, c.global_attn, c.decoupled_attn, f"{c.ratio:.4f}", c.global_total, c.decoupled_total])
    if args.out:
        write_text(args.out, buffer.getvalue())
        digest = config_hash({"n": args.n, "tau": args.tau, "d": args.d, "heads": args.heads})
        write_manifest(args.out, "bench", args.argv, digest, None, [], [args.out])
    else:
        sys.stdout.write(buffer.getvalue())
    return EXIT_OK


def cmd_train(args) -> int:
    config = _tracker_config(args.config)
    train = _train_config(args)
    scenarios = [s for name in args.suite for s in scenario_suite(name, args.count, train.seed)]
    initial = _params(args, config)
    digest = config_hash(config, train, args.suite, args.count)
    run_id = make_run_id("train", digest, train.seed)
    logger.info(f"[{run_id}] Training on {len(scenarios)} scenarios from {', '.join(args.suite)}")
    dataset = harvest(scenarios, initial, config, train.match_dist)
    params, motion, refine = train_weights(dataset, initial, config, train)
    write_weights(args.out, params)
    outputs = [args.out]
    if args.loss_csv:
        write_text(args.loss_csv, motion.loss_csv())
        outputs.append(args.loss_csv)
        if refine is not None:
            refine_csv = Path(args.loss_csv).with_name(Path(args.loss_csv).stem + ".refine.csv")
            write_text(refine_csv, refine.loss_csv())
            outputs.append(refine_csv)
    write_manifest(args.out, "train", args.argv, digest, train.seed, [p for p in (args.config, args.weights) if p], outputs)
    logger.info(f"[{run_id}] Motion loss {motion.initial_loss:.6f} -> {motion.final_loss:.6f}, kept step {motion.best_step}")
    return EXIT_OK


def cmd_plot(args) -> int:
    gt = read_tracks(args.gt)
    pred = read_tracks(args.pred)
    plot_bev(gt, pred, args.out, args.frame, args.title)
    write_manifest(args.out, "plot", args.argv, config_hash({"frame": args.frame, "title": args.title}), None,
                   [args.gt, args.pred], [args.out])
    return EXIT_OK


def cmd_repro(args) -> int:
    config = _tracker_config(args.config)
    baseline = _baseline_config(args.baseline_config)
    train = load_model(args.train_config, TrainConfig) if args.train_config else TrainConfig(train_refine_head=True)
    train = train.model_copy(update={"seed": args.seed, **({"steps": args.steps} if args.steps else {})})
    counts = {name: args.count for name in SUITE_COUNTS} if args.count else None
    digest = config_hash(config, baseline, train, counts, args.lambda_f_sweep)
    run_id = make_run_id("repro", digest, args.seed)
    out = Path(args.out)
    result = run_repro(out, args.seed, config, baseline, train, counts, args.lambda_f_sweep, run_id)
    inputs = [p for p in (args.config, args.baseline_config, args.train_config) if p]
    write_manifest(out, "repro", args.argv, digest, args.seed, inputs, result.outputs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bevtrack", description="Query-propagation 3D multi-object tracking")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="INFO", help="Root log level (default INFO)")
    parser.add_argument("--plain-logs", action="store_true", help="Plain text logs instead of JSON lines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Generate ground truth and detections for scenarios")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="Scenario config JSON")
    src.add_argument("--suite", choices=sorted(SUITES))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--frames", type=int, default=None, help="Override suite sequence length")
    p.add_argument("--seed", type=int, default=None, help="Suite seed, or a seed override for --scenario")
    p.add_argument("--d", type=int, default=TrackerConfig().d, help="Query feature width")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("track", help="Track a detection log")
    p.add_argument("--detections", required=True)
    p.add_argument("--weights", help="Weights JSON (default: fresh initialization from --seed)")
    p.add_argument("--config", help="TrackerConfig JSON")
    p.add_argument("--baseline-config", help="BaselineConfig JSON")
    p.add_argument("--mode", default="query", help=f"One of {', '.join(MODES + tuple(MODE_ALIASES))}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--last-frame", type=int, default=-1, help="Step through this frame even without detections")
    p.add_argument("--forecasts", help="Also write the forecast log here")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_track)

    p = sub.add_parser("eval", help="Score a track log against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--forecasts", help="Forecast log for ADE/FDE")
    p.add_argument("--horizon", type=int, default=8)
    p.add_argument("--match-dist", type=float, default=2.0)
    p.add_argument("--n-recall", type=int, default=40)
    p.add_argument("--thresholds-csv")
    p.add_argument("--report", required=True)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("bench", help="Attention FLOPs, global against decoupled")
    p.add_argument("--n", type=_int_list, default=[2, 8, 16, 32, 64])
    p.add_argument("--tau", type=_int_list, default=[2, 4, 8])
    p.add_argument("--d", type=int, default=TrackerConfig().d)
    p.add_argument("--heads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("train", help="Toy-train the motion head (and optionally the refinement head)")
    p.add_argument("--suite", action="append", choices=sorted(SUITES), required=True)
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--config", help="TrackerConfig JSON")
    p.add_argument("--train-config", help="TrainConfig JSON")
    p.add_argument("--weights", help="Starting weights (default: fresh initialization)")
    p.add_argument("--steps", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lambda-f", type=float)
    p.add_argument("--refine", action="store_true", help="Also train the refinement head")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss-csv")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("plot", help="Static BEV plot of a track log over ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--frame", type=int, default=None, help="Last frame drawn")
    p.add_argument("--title", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("repro", help="Regenerate the full ablation table")
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--count", type=int, help="Scenarios per suite (default per suite)")
    p.add_argument("--steps", type=int, help="Training steps")
    p.add_argument("--config", help="TrackerConfig JSON")
    p.add_argument("--baseline-config", help="BaselineConfig JSON")
    p.add_argument("--train-config", help="TrainConfig JSON")
    p.add_argument("--lambda-f-sweep", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_repro)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    args.argv = argv
    configure_logging(args.log_level, json_format=not args.plain_logs)
    try:
        return args.handler(args)
    except USAGE_ERRORS as e:
        logger.error(f"{args.command} failed: [{e.error_code}] {e.message}", exc_info=True)
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except BevTrackError as e:
        logger.error(f"{args.command} failed: [{e.error_code}] {e.message}", exc_info=True)
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"{args.command} failed unexpectedly: {str(e)}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
