"""Operator entry point: generate traces, simulate sessions, evaluate runs.

Exit codes: 0 on success, 1 for trace/IO problems, 2 for configuration or
parameter problems. Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import (
    CoachError,
    ConfigError,
    InvalidParams,
    IoFailure,
    MissingAnnotations,
    ParseError,
    UnsortedTrace,
)
from .pipeline import build_report, evaluate_trace, run_session
from .traceio import (
    AnnotationRecord,
    GeneratorParams,
    generate_trace,
    read_trace,
    write_jsonl,
    write_metrics_csv,
    write_trace,
)

EXIT_OK = 0
EXIT_TRACE = 1
EXIT_CONFIG = 2

POLICIES = ("low-stimulus", "turn-based", "mimicking")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robocoach",
        description="Exercise-coach engine: synthetic traces, simulated sessions, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic trace with ground truth")
    gen.add_argument("--out", required=True, help="output trace path")
    gen.add_argument("--exercise", default="shoulder_press",
                     choices=("shoulder_press", "side_lateral_raise"))
    gen.add_argument("--reps", type=int, default=5, help="planted repetitions")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise-joints", type=float, default=0.0, metavar="METERS")
    gen.add_argument("--noise-pixels", type=float, default=0.0, metavar="PIXELS")
    gen.add_argument("--frame-rate", type=float, default=30.0, metavar="HZ")
    gen.add_argument("--excursion", type=float, default=None, metavar="METERS")
    gen.add_argument("--idle", type=float, default=0.0, metavar="SECONDS",
                     help="generate an idle trace of this length instead of reps")
    gen.add_argument("--speech", action="append", default=[], metavar="T:KEYWORD",
                     help="inject a speech keyword at time T (repeatable)")
    gen.add_argument("--away", action="append", default=[], metavar="T0:T1",
                     help="plant a facing-away attention interval (repeatable)")

    sim = sub.add_parser("simulate", help="run the full coach over a trace")
    sim.add_argument("--trace", required=True)
    sim.add_argument("--policy", default=None, choices=POLICIES)
    sim.add_argument("--config", default=None, help="config file (or $COACH_CONFIG)")
    sim.add_argument("--out", default=None, help="session log path (default <trace>.session.jsonl)")
    sim.add_argument("--report", default=None, help="metrics CSV path (default <out>.report.csv)")

    ev = sub.add_parser("evaluate", help="score a trace against its annotations")
    ev.add_argument("--trace", required=True)
    ev.add_argument("--config", default=None)
    ev.add_argument("--out", default=None, help="report CSV path (default <trace>.report.csv)")
    return parser


def _parse_speech_script(items: list[str]) -> tuple[tuple[float, str], ...]:
    script = []
    for item in items:
        try:
            t_str, keyword = item.split(":", 1)
            script.append((float(t_str), keyword))
        except ValueError:
            raise InvalidParams(f"--speech expects T:KEYWORD, got {item!r}") from None
    return tuple(script)


def _parse_attention_script(away: list[str], reps: int, idle: float):
    """Turn --away T0:T1 windows into an interval script; attentive elsewhere."""
    if not away:
        return ()
    windows = []
    for item in away:
        try:
            t0_str, t1_str = item.split(":", 1)
            windows.append((float(t0_str), float(t1_str)))
        except ValueError:
            raise InvalidParams(f"--away expects T0:T1, got {item!r}") from None
    windows.sort()
    script: list[tuple[float, str]] = []
    cursor = 0.0
    for t0, t1 in windows:
        if t1 <= t0 or t0 < cursor:
            raise InvalidParams("--away windows must be ordered and non-overlapping")
        if t0 > cursor:
            script.append((t0 - cursor, "facing_robot_eyes_open"))
        script.append((t1 - t0, "facing_away"))
        cursor = t1
    return tuple(script)


def _cmd_generate(args) -> int:
    params = GeneratorParams(
        exercise=args.exercise,
        repetitions=args.reps,
        joint_noise=args.noise_joints,
        landmark_noise=args.noise_pixels,
        frame_rate=args.frame_rate,
        seed=args.seed,
        excursion=args.excursion,
        idle_seconds=args.idle,
        speech_script=_parse_speech_script(args.speech),
        attention_script=_parse_attention_script(args.away, args.reps, args.idle),
    )
    records = generate_trace(params)
    try:
        write_trace(records, args.out)
    except OSError as exc:
        raise IoFailure(f"cannot write {args.out}: {exc}") from exc

    reps = sum(1 for r in records if isinstance(r, AnnotationRecord) and r.kind == "rep_start")
    intervals = sum(1 for r in records if isinstance(r, AnnotationRecord) and r.kind == "attention")
    duration = records[-1].timestamp if records else 0.0
    print(f"wrote {args.out}: {len(records)} records, {duration:.1f} s")
    print(f"planted: exercise={args.exercise} reps={reps} attention_intervals={intervals}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    records = read_trace(args.trace)
    result = run_session(records, cfg, policy=args.policy)

    out = args.out or f"{args.trace}.session.jsonl"
    report_path = args.report or f"{out}.report.csv"
    try:
        write_jsonl(result.log_rows, out)
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc
    report = build_report(result, command_log_path=str(out))
    try:
        write_metrics_csv(report.rows(), report_path)
    except OSError as exc:
        raise IoFailure(f"cannot write {report_path}: {exc}") from exc

    controller = result.controller
    print(f"session log: {out}")
    print(f"report: {report_path}")
    print(f"final phase: {controller.phase.value}")
    for name, done in controller.completed.items():
        print(f"  {name}: {done}/{controller.config.repetitions} reps")
    if report.latency_p99_ms is not None:
        print(f"latency p50/p99: {report.latency_p50_ms:.3f}/{report.latency_p99_ms:.3f} ms")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    records = read_trace(args.trace)
    report = evaluate_trace(records, cfg)
    out = args.out or f"{args.trace}.report.csv"
    try:
        write_metrics_csv(report.rows(), out)
    except OSError as exc:
        raise IoFailure(f"cannot write {out}: {exc}") from exc

    print(f"report: {out}")
    if report.exercise is not None:
        e = report.exercise
        recall = "n/a" if e.recall is None else f"{e.recall:.3f}"
        print(
            f"reps[{e.name}]: planted={e.planted} correct={e.detected_correct} "
            f"matched={e.matched} recall={recall} false_positives={e.false_positives}"
        )
    acc = report.attention_interval_accuracy
    if acc is not None:
        print(f"attention interval accuracy: {acc:.3f} "
              f"({report.attention_interval_correct}/{report.attention_interval_total})")
    if report.rotation_error_mean_deg is not None:
        print(f"head pose rotation error mean/max: "
              f"{report.rotation_error_mean_deg:.4f}/{report.rotation_error_max_deg:.4f} deg")
    if report.latency_p99_ms is not None:
        print(f"latency p50/p99: {report.latency_p50_ms:.3f}/{report.latency_p99_ms:.3f} ms")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": _cmd_generate,
        "simulate": _cmd_simulate,
        "evaluate": _cmd_evaluate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, InvalidParams) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, UnsortedTrace, MissingAnnotations, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except CoachError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRACE


if __name__ == "__main__":
    sys.exit(main())
