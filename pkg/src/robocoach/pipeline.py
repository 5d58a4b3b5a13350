"""Replay of trace records through perception, monitoring, and the coach.

One Pipeline instance consumes a timestamp-sorted record list. Skeleton
frames drive the rep engine and arm retargeting, landmark frames drive
head-pose estimation and the attention monitor, speech records drive
keyword handling. With a session attached, every derived event is fed to
the session controller and an ordered session log is accumulated; without
one (evaluation mode) only perception runs. Ground-truth annotations are
collected either way and scored by build_report.
"""

from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from .attention import AttentionMonitor, InterruptionEvent, SpeechEvent
from .errors import (
    BehindCamera,
    DegenerateArm,
    DegenerateConfiguration,
    DivergedPose,
    MissingAnnotations,
    MissingJoint,
)
from .exercise import ExerciseEngine, ExerciseSpec, RepEvent
from .geometry import (
    JointId,
    RigidPose,
    SkeletonFrame,
    Timestamp,
    Vec3,
    rotation_angle,
    rotation_from_euler,
)
from .headpose import HeadPoseEstimate, classify_attention_direction, estimate_head_pose, eye_aspect_ratio
from .retarget import ArmObservation, RobotJointAngles, retarget
from .session import AttentionRestored, BehaviorCommand, SessionController, StateTransition, Tick
from .traceio import (
    AnnotationRecord,
    LandmarkRecord,
    SkeletonRecord,
    SpeechRecord,
    TraceRecord,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttentionInterval:
    start: Timestamp
    end: Timestamp
    label: str
    yaw: float
    pitch: float
    roll: float
    translation: Vec3


@dataclass(frozen=True)
class RepWindow:
    index: int
    start: Timestamp
    end: Timestamp


@dataclass
class PipelineResult:
    rep_events: list[RepEvent] = field(default_factory=list)
    interruptions: list[InterruptionEvent] = field(default_factory=list)
    estimates: list[tuple[Timestamp, HeadPoseEstimate | None, str | None]] = field(
        default_factory=list
    )
    latencies_ms: list[float] = field(default_factory=list)
    log_rows: list[dict] = field(default_factory=list)
    frames_processed: int = 0
    landmark_frames: int = 0
    angle_inputs: int = 0
    mirror_eligible_inputs: int = 0
    skipped_frames: int = 0
    # Ground truth collected from annotation records.
    annotated_exercise: str | None = None
    annotated_repetitions: int | None = None
    rep_windows: list[RepWindow] = field(default_factory=list)
    attention_intervals: list[AttentionInterval] = field(default_factory=list)
    engine_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    controller: SessionController | None = None


def _arm_observation(frame: SkeletonFrame, tracked: JointId) -> ArmObservation | None:
    side = "left" if tracked.value.startswith("left") else "right"
    if side == "left":
        shoulder, opposite = JointId.LEFT_SHOULDER, JointId.RIGHT_SHOULDER
        elbow, hand, wrist = JointId.LEFT_ELBOW, JointId.LEFT_HAND, JointId.LEFT_WRIST
    else:
        shoulder, opposite = JointId.RIGHT_SHOULDER, JointId.LEFT_SHOULDER
        elbow, hand, wrist = JointId.RIGHT_ELBOW, JointId.RIGHT_HAND, JointId.RIGHT_WRIST
    torso = frame.position(JointId.TORSO)
    s = frame.position(shoulder)
    s2 = frame.position(opposite)
    e = frame.position(elbow)
    h = frame.position(hand) or frame.position(wrist)
    if None in (torso, s, s2, e, h):
        return None
    try:
        return ArmObservation(
            torso=torso, shoulder=s, opposite_shoulder=s2, elbow=e, hand=h,
            side=side, timestamp=frame.timestamp,
        )
    except ValueError:
        return None


class _MotionTracker:
    """Windowed speed estimate of one joint, robust to frame-level jitter."""

    def __init__(self, window: float, threshold: float):
        self.window = window
        self.threshold = threshold
        self._samples: deque[tuple[Timestamp, Vec3]] = deque()

    def update(self, t: Timestamp, pos: Vec3 | None) -> bool:
        if pos is not None:
            self._samples.append((t, pos))
        while self._samples and self._samples[0][0] < t - self.window:
            self._samples.popleft()
        half = t - self.window / 2.0
        older = [p for ts, p in self._samples if ts < half]
        newer = [p for ts, p in self._samples if ts >= half]
        if not older or not newer:
            return False

        def mean(points: list[Vec3]) -> Vec3:
            acc = Vec3(0.0, 0.0, 0.0)
            for p in points:
                acc = acc + p
            return acc * (1.0 / len(points))

        speed = (mean(newer) - mean(older)).norm() / (self.window / 2.0)
        return speed > self.threshold


class Pipeline:
    """Replays records; attach_session() first for the full coach loop."""

    def __init__(self, cfg: dict[str, str]):
        self.cfg = cfg
        self.intrinsics = cfgmod.camera_intrinsics(cfg)
        self.face_model = cfgmod.face_model(cfg)
        self.lm_options = cfgmod.lm_options(cfg)
        self.attention_thresholds = cfgmod.attention_thresholds(cfg)
        self.robot = cfgmod.robot_model(cfg)
        self.tiny = float(cfg["retarget.tiny_threshold"])
        self.large = float(cfg["retarget.large_threshold"])
        self.engine = ExerciseEngine()
        self.controller: SessionController | None = None
        self.monitor: AttentionMonitor | None = None
        self._specs: dict[str, ExerciseSpec] = {}
        self._eval_spec: ExerciseSpec | None = None
        self._prev_angles: RobotJointAngles | None = None
        self._motion = _MotionTracker(
            window=float(cfg["attention.motion_window"]),
            threshold=float(cfg["attention.motion_speed_threshold"]),
        )
        self._person_moving = False
        self._journal_cursor = 0

    def attach_session(self, policy=None, exercises: tuple[str, ...] | None = None):
        session_cfg = cfgmod.session_config(self.cfg, policy=policy, exercises=exercises)
        self.controller = SessionController(session_cfg)
        self.monitor = AttentionMonitor(timeout=float(self.cfg["attention.timeout"]))
        for name in session_cfg.exercises:
            self._specs[name] = cfgmod.exercise_spec(self.cfg, name)
        return self

    def process(self, records: list[TraceRecord]) -> PipelineResult:
        result = PipelineResult(controller=self.controller)
        for rec in records:
            if isinstance(rec, AnnotationRecord):
                self._collect_annotation(rec, result)
                continue
            t0 = time.perf_counter()
            if isinstance(rec, SkeletonRecord):
                self._on_skeleton(rec.frame, result)
            elif isinstance(rec, LandmarkRecord):
                self._on_landmarks(rec, result)
            elif isinstance(rec, SpeechRecord):
                self._on_speech(rec.event, result)
            result.latencies_ms.append((time.perf_counter() - t0) * 1e3)
        result.engine_counts = self.engine.all_counts()
        if self.controller is not None:
            self._append_journal(result)
        return result

    # -- per-record handlers --------------------------------------------------

    def _active_spec(self) -> ExerciseSpec | None:
        if self.controller is not None:
            name = self.controller.current_exercise()
            return self._specs.get(name) if name else None
        return self._eval_spec

    def _on_skeleton(self, frame: SkeletonFrame, result: PipelineResult):
        result.frames_processed += 1
        if self.controller is not None:
            self.controller.step(Tick(frame.timestamp))
            self._append_journal(result)
        spec = self._active_spec()
        if spec is None:
            return
        self._person_moving = self._motion.update(
            frame.timestamp, frame.position(spec.tracked_joint)
        )
        try:
            event = self.engine.update(frame, spec)
        except MissingJoint as exc:
            result.skipped_frames += 1
            log.warning("skipping frame at t=%.3f: %s", frame.timestamp, exc)
            return
        if event is not None:
            result.rep_events.append(event)
            if self.controller is not None:
                result.log_rows.append(_rep_row(event))
                self.controller.step(event)
                self._append_journal(result)
        self._retarget_frame(frame, spec, result)

    def _retarget_frame(self, frame: SkeletonFrame, spec: ExerciseSpec, result: PipelineResult):
        obs = _arm_observation(frame, spec.tracked_joint)
        if obs is None:
            return
        try:
            angles = retarget(
                obs, self.robot, self._prev_angles, tiny=self.tiny, large=self.large
            )
        except (DegenerateArm, DegenerateConfiguration):
            return
        if angles is None:
            return
        self._prev_angles = angles
        result.angle_inputs += 1
        if self.controller is not None:
            phase = self.controller.phase.value
            if phase in ("exercise_active", "feedback"):
                result.mirror_eligible_inputs += 1
            self.controller.step(angles)
            self._append_journal(result)

    def _on_landmarks(self, rec: LandmarkRecord, result: PipelineResult):
        result.landmark_frames += 1
        t = rec.timestamp
        estimate: HeadPoseEstimate | None
        label: str | None
        try:
            estimate = estimate_head_pose(
                rec.landmarks, self.face_model, self.intrinsics, **self.lm_options
            )
        except (DegenerateConfiguration, BehindCamera, DivergedPose):
            estimate = None
        if estimate is not None and estimate.converged:
            try:
                ear_left = eye_aspect_ratio(rec.left_eye)
                ear_right = eye_aspect_ratio(rec.right_eye)
            except Exception:
                ear_left = ear_right = 0.0
            label = classify_attention_direction(
                estimate, ear_left, ear_right, **self.attention_thresholds
            )
        else:
            label = None
        result.estimates.append((t, estimate, label))

        if self.monitor is None or self.controller is None:
            return
        was = self.monitor.state.label
        event = self.monitor.ingest_frame(t, label, self._person_moving)
        if event is not None:
            result.interruptions.append(event)
            result.log_rows.append(_interruption_row(event))
            self.controller.step(event)
            self._append_journal(result)
        if was == "interrupted" and self.monitor.state.label == "attentive":
            self.controller.step(AttentionRestored(t))
            self._append_journal(result)

    def _on_speech(self, ev: SpeechEvent, result: PipelineResult):
        if self.monitor is None or self.controller is None:
            return
        interruption = self.monitor.ingest_speech(ev)
        if interruption is not None:
            result.interruptions.append(interruption)
            result.log_rows.append(_interruption_row(interruption))
            self.controller.step(interruption)
        else:
            self.controller.step(ev)
        self._append_journal(result)

    def _collect_annotation(self, rec: AnnotationRecord, result: PipelineResult):
        if rec.kind == "exercise":
            result.annotated_exercise = rec.data.get("name")
            result.annotated_repetitions = int(rec.data.get("repetitions", 0))
            if self.controller is None and result.annotated_exercise:
                self._eval_spec = cfgmod.exercise_spec(self.cfg, result.annotated_exercise)
        elif rec.kind == "rep_start":
            result.rep_windows.append(
                RepWindow(int(rec.data["index"]), rec.timestamp, math.inf)
            )
        elif rec.kind == "rep_end":
            idx = int(rec.data["index"])
            for i, w in enumerate(result.rep_windows):
                if w.index == idx and math.isinf(w.end):
                    result.rep_windows[i] = RepWindow(w.index, w.start, rec.timestamp)
                    break
        elif rec.kind == "attention":
            if result.attention_intervals:
                last = result.attention_intervals[-1]
                result.attention_intervals[-1] = AttentionInterval(
                    last.start, rec.timestamp, last.label,
                    last.yaw, last.pitch, last.roll, last.translation,
                )
            tr = rec.data.get("translation", [0.0, 0.0, 2.0])
            result.attention_intervals.append(
                AttentionInterval(
                    start=rec.timestamp,
                    end=math.inf,
                    label=rec.data["label"],
                    yaw=float(rec.data.get("yaw", 0.0)),
                    pitch=float(rec.data.get("pitch", 0.0)),
                    roll=float(rec.data.get("roll", 0.0)),
                    translation=Vec3(float(tr[0]), float(tr[1]), float(tr[2])),
                )
            )

    def _append_journal(self, result: PipelineResult):
        journal = self.controller.journal
        while self._journal_cursor < len(journal):
            entry = journal[self._journal_cursor]
            self._journal_cursor += 1
            if isinstance(entry, BehaviorCommand):
                result.log_rows.append(_command_row(entry))
            else:
                result.log_rows.append(_transition_row(entry))


def _command_row(cmd: BehaviorCommand) -> dict:
    payload: dict = {"kind": cmd.kind, "provenance": cmd.provenance.value}
    if cmd.text is not None:
        payload["text"] = cmd.text
    if cmd.exercise is not None:
        payload["exercise"] = cmd.exercise
    if cmd.angles is not None:
        payload["angles"] = list(cmd.angles.as_tuple())
        payload["angles_raw"] = list(cmd.angles.raw_tuple())
    return {"t": cmd.timestamp, "type": "command", "payload": payload}


def _rep_row(event: RepEvent) -> dict:
    return {
        "t": event.timestamp,
        "type": "rep_event",
        "payload": {
            "exercise": event.exercise,
            "verdict": event.verdict,
            "failure_reason": event.failure_reason,
            "path_length": event.path_length,
            "max_segment_angle": event.max_segment_angle,
            "excursion": event.excursion,
            "rep_index": event.rep_index,
        },
    }


def _interruption_row(event: InterruptionEvent) -> dict:
    return {
        "t": event.timestamp,
        "type": "interruption",
        "payload": {"kind": event.kind, "source": event.source},
    }


def _transition_row(tr: StateTransition) -> dict:
    return {
        "t": tr.timestamp,
        "type": "state_transition",
        "payload": {"from": tr.source.value, "to": tr.target.value, "cause": tr.cause},
    }


# ---------------------------------------------------------------------------
# Reporting


@dataclass(frozen=True)
class ExerciseReport:
    name: str
    planted: int
    detected_correct: int
    detected_incorrect: int
    matched: int

    @property
    def recall(self) -> float | None:
        return self.matched / self.planted if self.planted else None

    @property
    def precision(self) -> float | None:
        return self.matched / self.detected_correct if self.detected_correct else None

    @property
    def false_positives(self) -> int:
        return self.detected_correct - self.matched


@dataclass(frozen=True)
class RunReport:
    exercise: ExerciseReport | None
    attention_frames: int
    attention_frame_correct: int
    attention_interval_total: int
    attention_interval_correct: int
    confusion: dict[tuple[str, str], int]
    rotation_error_mean_deg: float | None
    rotation_error_max_deg: float | None
    translation_error_mean_pct: float | None
    translation_error_max_pct: float | None
    latency_p50_ms: float | None
    latency_p99_ms: float | None
    frames_processed: int
    command_log_path: str | None = None

    @property
    def attention_interval_accuracy(self) -> float | None:
        if not self.attention_interval_total:
            return None
        return self.attention_interval_correct / self.attention_interval_total

    def rows(self) -> list[tuple[str, object, str]]:
        def fmt(x, nd=9):
            return "" if x is None else round(x, nd)

        rows: list[tuple[str, object, str]] = []
        if self.exercise is not None:
            e = self.exercise
            rows += [
                (f"exercise.{e.name}.planted_reps", e.planted, "count"),
                (f"exercise.{e.name}.detected_correct", e.detected_correct, "count"),
                (f"exercise.{e.name}.detected_incorrect", e.detected_incorrect, "count"),
                (f"exercise.{e.name}.matched", e.matched, "count"),
                (f"exercise.{e.name}.false_positives", e.false_positives, "count"),
                (f"exercise.{e.name}.recall", fmt(e.recall), "ratio"),
                (f"exercise.{e.name}.precision", fmt(e.precision), "ratio"),
            ]
        rows += [
            ("attention.frames", self.attention_frames, "count"),
            ("attention.frame_correct", self.attention_frame_correct, "count"),
            ("attention.intervals", self.attention_interval_total, "count"),
            ("attention.interval_correct", self.attention_interval_correct, "count"),
            ("attention.interval_accuracy", fmt(self.attention_interval_accuracy), "ratio"),
        ]
        for (planted, predicted), count in sorted(self.confusion.items()):
            rows.append((f"attention.confusion.{planted}.as.{predicted}", count, "count"))
        rows += [
            ("head_pose.rotation_error_mean", fmt(self.rotation_error_mean_deg), "deg"),
            ("head_pose.rotation_error_max", fmt(self.rotation_error_max_deg), "deg"),
            ("head_pose.translation_error_mean", fmt(self.translation_error_mean_pct), "percent"),
            ("head_pose.translation_error_max", fmt(self.translation_error_max_pct), "percent"),
            ("latency.p50", fmt(self.latency_p50_ms, 6), "ms"),
            ("latency.p99", fmt(self.latency_p99_ms, 6), "ms"),
            ("frames.processed", self.frames_processed, "count"),
        ]
        if self.command_log_path is not None:
            rows.append(("session.command_log", self.command_log_path, "path"))
        return rows


# Correct rep events are matched to planted rep windows with a little slack
# after the annotated end, since an attempt closes as the arm settles.
REP_MATCH_SLACK = 0.5


def _interval_for(intervals: list[AttentionInterval], t: Timestamp) -> AttentionInterval | None:
    chosen = None
    for iv in intervals:
        if iv.start <= t:
            chosen = iv
        else:
            break
    return chosen


def build_report(
    result: PipelineResult,
    *,
    require_annotations: bool = False,
    command_log_path: str | None = None,
) -> RunReport:
    if require_annotations and result.annotated_exercise is None:
        raise MissingAnnotations("trace carries no ground-truth annotations")

    exercise_report = None
    if result.annotated_exercise is not None:
        name = result.annotated_exercise
        correct = [e for e in result.rep_events if e.exercise == name and e.verdict == "correct"]
        incorrect = [
            e for e in result.rep_events if e.exercise == name and e.verdict == "incorrect"
        ]
        unmatched = list(correct)
        matched = 0
        for window in result.rep_windows:
            for e in unmatched:
                if window.start <= e.timestamp <= window.end + REP_MATCH_SLACK:
                    unmatched.remove(e)
                    matched += 1
                    break
        exercise_report = ExerciseReport(
            name=name,
            planted=len(result.rep_windows),
            detected_correct=len(correct),
            detected_incorrect=len(incorrect),
            matched=matched,
        )

    confusion: dict[tuple[str, str], int] = {}
    frame_correct = 0
    frames = 0
    rot_errors: list[float] = []
    tr_errors: list[float] = []
    votes: dict[int, dict[str, int]] = {}
    for t, estimate, label in result.estimates:
        iv = _interval_for(result.attention_intervals, t)
        if iv is None:
            continue
        frames += 1
        predicted = label or "none"
        confusion[(iv.label, predicted)] = confusion.get((iv.label, predicted), 0) + 1
        if predicted == iv.label:
            frame_correct += 1
        key = id(iv)
        votes.setdefault(key, {})
        votes[key][predicted] = votes[key].get(predicted, 0) + 1
        if estimate is not None and estimate.converged:
            planted_rot = rotation_from_euler(iv.yaw, iv.pitch, iv.roll)
            rot_errors.append(
                math.degrees(rotation_angle(estimate.pose.rotation @ planted_rot.T))
            )
            denom = iv.translation.norm()
            if denom > 0:
                tr_errors.append(
                    100.0 * (estimate.pose.translation - iv.translation).norm() / denom
                )

    interval_total = 0
    interval_correct = 0
    for iv in result.attention_intervals:
        per = votes.get(id(iv))
        if not per:
            continue
        interval_total += 1
        modal = max(sorted(per), key=lambda k: per[k])
        if modal == iv.label:
            interval_correct += 1

    if require_annotations and not result.rep_windows and not result.attention_intervals:
        raise MissingAnnotations("trace has an exercise header but no ground-truth markers")

    lat = np.asarray(result.latencies_ms) if result.latencies_ms else None
    return RunReport(
        exercise=exercise_report,
        attention_frames=frames,
        attention_frame_correct=frame_correct,
        attention_interval_total=interval_total,
        attention_interval_correct=interval_correct,
        confusion=confusion,
        rotation_error_mean_deg=float(np.mean(rot_errors)) if rot_errors else None,
        rotation_error_max_deg=float(np.max(rot_errors)) if rot_errors else None,
        translation_error_mean_pct=float(np.mean(tr_errors)) if tr_errors else None,
        translation_error_max_pct=float(np.max(tr_errors)) if tr_errors else None,
        latency_p50_ms=float(np.percentile(lat, 50)) if lat is not None else None,
        latency_p99_ms=float(np.percentile(lat, 99)) if lat is not None else None,
        frames_processed=result.frames_processed,
        command_log_path=command_log_path,
    )


def run_session(
    records: list[TraceRecord],
    cfg: dict[str, str],
    policy=None,
    exercises: tuple[str, ...] | None = None,
) -> PipelineResult:
    """Full coach loop over a trace. Session exercises default to the
    trace's annotated exercise when present, else the configured list."""
    if exercises is None:
        for rec in records:
            if isinstance(rec, AnnotationRecord) and rec.kind == "exercise":
                exercises = (rec.data["name"],)
                break
    pipeline = Pipeline(cfg).attach_session(policy=policy, exercises=exercises)
    return pipeline.process(records)


def evaluate_trace(records: list[TraceRecord], cfg: dict[str, str]) -> RunReport:
    """Perception-only replay scored against the trace's own annotations."""
    result = Pipeline(cfg).process(records)
    return build_report(result, require_annotations=True)
