"""Trace reading/writing and the synthetic ground-truth generator.

Traces are UTF-8 text, one record per line, each a JSON object
``{"t": seconds, "type": ..., "payload": {...}}`` with type one of
skeleton / landmarks / speech / annotation. Records must be sorted by
timestamp; readers reject rather than reorder. Numbers are written with
full repr precision so write/read round-trips are exact.

The generator plants a known number of repetitions as smooth elliptical
wrist loops, a scripted head-pose/attention trajectory projected through
the pinhole camera, and optional speech events. Its annotations are the
ground truth the rest of the pipeline is scored against, and for a fixed
seed its output is byte-identical across runs.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Union

import numpy as np

from .attention import KEYWORDS, SpeechEvent
from .errors import InvalidParams, ParseError, UnknownKeyword, UnsortedTrace
from .exercise import EXERCISE_NAMES
from .geometry import (
    CameraIntrinsics,
    JointId,
    RigidPose,
    SkeletonFrame,
    Timestamp,
    Vec3,
    project_point,
    rotation_from_euler,
)
from .headpose import ATTENTION_DIRECTIONS, FACE_POINT_NAMES, EyeLandmarks, LandmarkSet2D

# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class SkeletonRecord:
    frame: SkeletonFrame

    @property
    def timestamp(self) -> Timestamp:
        return self.frame.timestamp


@dataclass(frozen=True)
class LandmarkRecord:
    landmarks: LandmarkSet2D
    left_eye: EyeLandmarks
    right_eye: EyeLandmarks

    @property
    def timestamp(self) -> Timestamp:
        return self.landmarks.timestamp


@dataclass(frozen=True)
class SpeechRecord:
    event: SpeechEvent

    @property
    def timestamp(self) -> Timestamp:
        return self.event.timestamp


@dataclass(frozen=True)
class AnnotationRecord:
    """Ground-truth marker: exercise header, rep boundary, or planted attention/pose."""

    timestamp: Timestamp
    kind: str
    data: dict

    ANNOTATION_KINDS = ("exercise", "rep_start", "rep_end", "attention")


TraceRecord = Union[SkeletonRecord, LandmarkRecord, SpeechRecord, AnnotationRecord]

# Stable ordering of co-timestamped records: ground truth first, then the
# perception streams.
_TYPE_PRIORITY = {"annotation": 0, "skeleton": 1, "landmarks": 2, "speech": 3}


def record_type(rec: TraceRecord) -> str:
    if isinstance(rec, SkeletonRecord):
        return "skeleton"
    if isinstance(rec, LandmarkRecord):
        return "landmarks"
    if isinstance(rec, SpeechRecord):
        return "speech"
    return "annotation"


# ---------------------------------------------------------------------------
# Serialization


def _record_payload(rec: TraceRecord) -> dict:
    if isinstance(rec, SkeletonRecord):
        return {
            "joints": {j.value: [p.x, p.y, p.z] for j, p in sorted(
                rec.frame.joints.items(), key=lambda kv: kv[0].value)},
            "confidence": {j.value: c for j, c in sorted(
                rec.frame.confidence.items(), key=lambda kv: kv[0].value)},
        }
    if isinstance(rec, LandmarkRecord):
        return {
            "points": {n: list(rec.landmarks.points[n]) for n in FACE_POINT_NAMES},
            "left_eye": [list(p) for p in rec.left_eye.points],
            "right_eye": [list(p) for p in rec.right_eye.points],
        }
    if isinstance(rec, SpeechRecord):
        return {"keyword": rec.event.keyword}
    return {"kind": rec.kind, **rec.data}


def record_to_line(rec: TraceRecord) -> str:
    body = {"t": rec.timestamp, "type": record_type(rec), "payload": _record_payload(rec)}
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def write_trace(records: Iterable[TraceRecord], destination) -> None:
    """Write records as line-delimited text to a path or open text file."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            write_trace(records, fh)
        return
    for rec in records:
        destination.write(record_to_line(rec))
        destination.write("\n")


def _parse_skeleton(payload: dict, lineno: int, t: float) -> SkeletonRecord:
    joints_raw = payload.get("joints")
    if not isinstance(joints_raw, dict) or not joints_raw:
        raise ParseError(lineno, "skeleton record needs a non-empty 'joints' map")
    joints: dict[JointId, Vec3] = {}
    for name, xyz in joints_raw.items():
        try:
            jid = JointId(name)
        except ValueError:
            raise ParseError(lineno, f"unknown joint name {name!r}") from None
        try:
            joints[jid] = Vec3(float(xyz[0]), float(xyz[1]), float(xyz[2]))
        except (TypeError, ValueError, IndexError) as exc:
            raise ParseError(lineno, f"bad coordinates for joint {name}: {exc}") from None
    confidence: dict[JointId, float] = {}
    for name, c in (payload.get("confidence") or {}).items():
        try:
            confidence[JointId(name)] = float(c)
        except (TypeError, ValueError) as exc:
            raise ParseError(lineno, f"bad confidence for joint {name}: {exc}") from None
    return SkeletonRecord(SkeletonFrame(timestamp=t, joints=joints, confidence=confidence))


def _parse_eye(points, lineno: int, which: str) -> EyeLandmarks:
    try:
        pts = tuple((float(p[0]), float(p[1])) for p in points)
        return EyeLandmarks(points=pts)
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(lineno, f"bad {which} eye landmarks: {exc}") from None


def _parse_landmarks(payload: dict, lineno: int, t: float) -> LandmarkRecord:
    raw = payload.get("points")
    if not isinstance(raw, dict):
        raise ParseError(lineno, "landmarks record needs a 'points' map")
    unknown = set(raw) - set(FACE_POINT_NAMES)
    if unknown:
        raise ParseError(lineno, f"unknown landmark names {sorted(unknown)}")
    try:
        points = {n: (float(raw[n][0]), float(raw[n][1])) for n in FACE_POINT_NAMES}
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(lineno, f"bad landmark points: {exc}") from None
    try:
        landmarks = LandmarkSet2D(timestamp=t, points=points)
    except ValueError as exc:
        raise ParseError(lineno, str(exc)) from None
    return LandmarkRecord(
        landmarks=landmarks,
        left_eye=_parse_eye(payload.get("left_eye", ()), lineno, "left"),
        right_eye=_parse_eye(payload.get("right_eye", ()), lineno, "right"),
    )


def _parse_speech(payload: dict, lineno: int, t: float) -> SpeechRecord:
    keyword = payload.get("keyword")
    if not isinstance(keyword, str):
        raise ParseError(lineno, "speech record needs a 'keyword' string")
    try:
        return SpeechRecord(SpeechEvent(timestamp=t, keyword=keyword))
    except UnknownKeyword:
        raise ParseError(lineno, f"keyword {keyword!r} outside {KEYWORDS}") from None


def _parse_annotation(payload: dict, lineno: int, t: float) -> AnnotationRecord:
    kind = payload.get("kind")
    if kind not in AnnotationRecord.ANNOTATION_KINDS:
        raise ParseError(lineno, f"unknown annotation kind {kind!r}")
    data = {k: v for k, v in payload.items() if k != "kind"}
    return AnnotationRecord(timestamp=t, kind=kind, data=data)


_PARSERS = {
    "skeleton": _parse_skeleton,
    "landmarks": _parse_landmarks,
    "speech": _parse_speech,
    "annotation": _parse_annotation,
}


def read_trace(source) -> list[TraceRecord]:
    """Parse a trace from a path, open text file, or iterable of lines.

    Raises ParseError with the offending line number for malformed records
    and UnsortedTrace when timestamps go backwards.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_trace(fh)
    records: list[TraceRecord] = []
    last_t = -math.inf
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            body = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"not valid JSON: {exc}") from None
        if not isinstance(body, dict):
            raise ParseError(lineno, "record must be a JSON object")
        rtype = body.get("type")
        if rtype not in _PARSERS:
            raise ParseError(lineno, f"unknown record type {rtype!r}")
        try:
            t = float(body["t"])
        except (KeyError, TypeError, ValueError):
            raise ParseError(lineno, "record needs a numeric 't'") from None
        if not math.isfinite(t) or t < 0:
            raise ParseError(lineno, f"timestamp must be finite and non-negative, got {t}")
        if t < last_t:
            raise UnsortedTrace(lineno)
        last_t = t
        payload = body.get("payload")
        if not isinstance(payload, dict):
            raise ParseError(lineno, "record needs a 'payload' object")
        records.append(_PARSERS[rtype](payload, lineno, t))
    return records


def write_jsonl(rows: Iterable[dict], destination) -> None:
    """Line-delimited JSON writer used for session logs."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            write_jsonl(rows, fh)
        return
    for row in rows:
        destination.write(json.dumps(row, sort_keys=True, separators=(",", ":")))
        destination.write("\n")


def read_jsonl(source) -> list[dict]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_jsonl(fh)
    return [json.loads(line) for line in source if line.strip()]


def write_metrics_csv(rows: Iterable[tuple[str, object, str]], destination) -> None:
    """Comma-separated metric table with a (metric, value, unit) header."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            write_metrics_csv(rows, fh)
        return
    destination.write("metric,value,unit\n")
    for metric, value, unit in rows:
        destination.write(f"{metric},{value},{unit}\n")


# ---------------------------------------------------------------------------
# Synthetic generator


@dataclass(frozen=True)
class GeneratorParams:
    """Everything the trace generator needs; the seed fixes all randomness."""

    exercise: str = "shoulder_press"
    repetitions: int = 5
    joint_noise: float = 0.0  # meters, i.i.d. per joint component per frame
    landmark_noise: float = 0.0  # pixels
    frame_rate: float = 30.0
    landmark_rate: float = 10.0
    seed: int = 0
    excursion: float | None = None  # peak excursion in meters; None = per-exercise default
    rep_duration: float = 3.0
    rest_between: float = 1.0
    lead_in: float = 2.0
    lead_out: float = 2.0
    idle_seconds: float = 0.0  # > 0 generates an idle trace with no reps
    attention_script: tuple[tuple[float, str], ...] = ()
    speech_script: tuple[tuple[float, str], ...] = ()
    intrinsics: CameraIntrinsics = CameraIntrinsics(800.0, 800.0, 320.0, 240.0)

    def validate(self) -> None:
        if self.exercise not in EXERCISE_NAMES:
            raise InvalidParams(f"unknown exercise {self.exercise!r}")
        if self.idle_seconds < 0:
            raise InvalidParams("idle_seconds must be >= 0")
        if self.idle_seconds == 0 and self.repetitions < 1:
            raise InvalidParams("repetitions must be >= 1 for a non-idle trace")
        if self.joint_noise < 0 or self.landmark_noise < 0:
            raise InvalidParams("noise levels must be >= 0")
        if self.frame_rate <= 0 or self.landmark_rate <= 0:
            raise InvalidParams("rates must be positive")
        if self.excursion is not None and self.excursion <= 0:
            raise InvalidParams("excursion amplitude must be positive")
        if self.rep_duration <= 0:
            raise InvalidParams("rep duration must be positive")
        for _, label in self.attention_script:
            if label not in ATTENTION_DIRECTIONS:
                raise InvalidParams(f"unknown attention label {label!r}")
        for _, keyword in self.speech_script:
            if keyword.lower() not in KEYWORDS:
                raise InvalidParams(f"unknown speech keyword {keyword!r}")


# Base skeleton, camera frame (x right, y up, z toward the subject), subject
# seated ~2 m from the camera. The left arm performs the exercises.
_BASE_JOINTS = {
    JointId.HEAD: Vec3(0.0, 0.40, 2.0),
    JointId.NECK: Vec3(0.0, 0.25, 2.0),
    JointId.TORSO: Vec3(0.0, 0.0, 2.0),
    JointId.LEFT_SHOULDER: Vec3(0.20, 0.22, 2.0),
    JointId.RIGHT_SHOULDER: Vec3(-0.20, 0.22, 2.0),
    JointId.LEFT_HIP: Vec3(0.12, -0.25, 2.0),
    JointId.RIGHT_HIP: Vec3(-0.12, -0.25, 2.0),
    JointId.RIGHT_ELBOW: Vec3(-0.24, -0.06, 2.0),
    JointId.RIGHT_WRIST: Vec3(-0.26, -0.28, 2.0),
    JointId.RIGHT_HAND: Vec3(-0.265, -0.36, 2.0),
}

_UPPER_ARM = 0.30
_FOREARM = 0.25
_HAND_LENGTH = 0.08
_REST_WRIST_REL = Vec3(0.06, -0.50, 0.0)

# Per-exercise wrist loop geometry, relative to the left shoulder.
_PRESS_START = Vec3(0.08, -0.08, 0.0)
_PRESS_SIDE_AMPLITUDE = 0.10
_LATERAL_START = Vec3(0.10, -0.42, 0.0)
_LATERAL_RISE = 0.38
_LATERAL_LOOP = 0.10
_DEFAULT_EXCURSION = {"shoulder_press": 0.45, "side_lateral_raise": 0.38}
_TRANSITION = 1.0  # seconds, rest <-> exercise start

_EAR_OPEN = 0.35
_EAR_CLOSED = 0.05
_EYE_INNER_OFFSET = 0.030  # meters from outer corner toward the nose


def _smoothstep(u: float) -> float:
    u = max(0.0, min(1.0, u))
    return u * u * (3.0 - 2.0 * u)


def _wrist_rel(exercise: str, amplitude: float, phase: float) -> Vec3:
    """Wrist position relative to the shoulder at loop phase in [0, 2pi]."""
    lobe = (1.0 - math.cos(phase)) / 2.0
    if exercise == "shoulder_press":
        rise = amplitude - _PRESS_START.y
        return Vec3(
            _PRESS_START.x + _PRESS_SIDE_AMPLITUDE * math.sin(phase),
            _PRESS_START.y + rise * lobe,
            _PRESS_START.z,
        )
    reach = (amplitude + 0.12) - _LATERAL_START.x
    return Vec3(
        _LATERAL_START.x + reach * lobe,
        _LATERAL_START.y + _LATERAL_RISE * lobe + _LATERAL_LOOP * math.sin(phase),
        _LATERAL_START.z,
    )


def _elbow_from_wrist(shoulder: Vec3, wrist: Vec3) -> Vec3:
    """Two-link inverse kinematics with an outward-down elbow bias."""
    w = wrist - shoulder
    d = w.norm()
    d_eff = max(abs(_UPPER_ARM - _FOREARM) + 1e-3, min(_UPPER_ARM + _FOREARM - 1e-3, d))
    u = w * (1.0 / d)
    cos_a = (_UPPER_ARM**2 + d_eff**2 - _FOREARM**2) / (2.0 * _UPPER_ARM * d_eff)
    cos_a = max(-1.0, min(1.0, cos_a))
    sin_a = math.sqrt(max(0.0, 1.0 - cos_a * cos_a))
    bias = Vec3(0.35, -1.0, 0.25)
    perp = bias - u * bias.dot(u)
    if perp.norm() < 1e-6:
        perp = Vec3(0.0, 0.0, 1.0) - u * u.z
    perp = perp * (1.0 / perp.norm())
    return shoulder + u * (_UPPER_ARM * cos_a) + perp * (_UPPER_ARM * sin_a)


def _left_arm(t_rel: Vec3) -> dict[JointId, Vec3]:
    shoulder = _BASE_JOINTS[JointId.LEFT_SHOULDER]
    wrist = shoulder + t_rel
    elbow = _elbow_from_wrist(shoulder, wrist)
    fore = wrist - elbow
    hand = wrist + fore * (_HAND_LENGTH / fore.norm())
    return {JointId.LEFT_ELBOW: elbow, JointId.LEFT_WRIST: wrist, JointId.LEFT_HAND: hand}


@dataclass(frozen=True)
class _Segment:
    start: float
    duration: float
    kind: str  # "rest" | "to_start" | "rep" | "hold" | "to_rest"
    rep_index: int = 0


def _build_timeline(params: GeneratorParams) -> tuple[list[_Segment], float]:
    if params.idle_seconds > 0:
        return [_Segment(0.0, params.idle_seconds, "rest")], params.idle_seconds
    segments = []
    t = 0.0

    def push(duration: float, kind: str, rep_index: int = 0):
        nonlocal t
        segments.append(_Segment(t, duration, kind, rep_index))
        t += duration

    push(params.lead_in, "rest")
    push(_TRANSITION, "to_start")
    for i in range(1, params.repetitions + 1):
        push(params.rep_duration, "rep", i)
        if i < params.repetitions:
            push(params.rest_between, "hold")
    push(_TRANSITION, "to_rest")
    push(params.lead_out, "rest")
    return segments, t


def _wrist_at(segments: list[_Segment], exercise: str, amplitude: float, t: float) -> Vec3:
    start_rel = _PRESS_START if exercise == "shoulder_press" else _LATERAL_START
    current = segments[-1]
    for seg in segments:
        if t < seg.start + seg.duration:
            current = seg
            break
    u = (t - current.start) / current.duration if current.duration > 0 else 0.0
    if current.kind == "rest":
        return _REST_WRIST_REL
    if current.kind == "to_start":
        s = _smoothstep(u)
        return _REST_WRIST_REL + (start_rel - _REST_WRIST_REL) * s
    if current.kind == "to_rest":
        s = _smoothstep(u)
        return start_rel + (_REST_WRIST_REL - start_rel) * s
    if current.kind == "hold":
        return start_rel
    return _wrist_rel(exercise, amplitude, 2.0 * math.pi * u)


def _attention_intervals(
    params: GeneratorParams, total: float
) -> list[tuple[float, float, str]]:
    """(start, end, label) covering [0, total); default is attentive throughout."""
    script = params.attention_script or ((total, "facing_robot_eyes_open"),)
    intervals = []
    t = 0.0
    for duration, label in script:
        if duration <= 0:
            raise InvalidParams("attention script durations must be positive")
        intervals.append((t, t + duration, label))
        t += duration
    if t < total:
        intervals.append((t, total, intervals[-1][2]))
    return intervals


def _planted_pose(rng: np.random.Generator, label: str) -> tuple[float, float, float, Vec3]:
    if label == "facing_away":
        yaw = float(rng.choice([-1.0, 1.0]) * rng.uniform(math.radians(45), math.radians(60)))
    else:
        yaw = float(rng.uniform(math.radians(-15), math.radians(15)))
    pitch = float(rng.uniform(math.radians(-10), math.radians(10)))
    roll = float(rng.uniform(math.radians(-8), math.radians(8)))
    translation = Vec3(
        float(rng.uniform(-0.05, 0.05)),
        float(rng.uniform(0.30, 0.40)),
        float(rng.uniform(1.7, 2.3)),
    )
    return yaw, pitch, roll, translation


def _eye_points(
    outer: tuple[float, float], inner: tuple[float, float], ear: float
) -> tuple[tuple[float, float], ...]:
    p1 = np.asarray(outer)
    p4 = np.asarray(inner)
    width = float(np.linalg.norm(p4 - p1))
    axis = (p4 - p1) / width
    normal = np.array([-axis[1], axis[0]])
    h = 0.5 * ear * width
    c1 = p1 + (p4 - p1) / 3.0
    c2 = p1 + 2.0 * (p4 - p1) / 3.0
    pts = (p1, c1 + h * normal, c2 + h * normal, p4, c2 - h * normal, c1 - h * normal)
    return tuple((float(p[0]), float(p[1])) for p in pts)


def _face_model_points() -> dict[str, Vec3]:
    # Kept in sync with the config defaults; the generator must project the
    # same model the solver fits.
    return {
        "nose_tip": Vec3(0.0, 0.0, 0.0),
        "chin": Vec3(0.0, -0.110, -0.020),
        "left_eye_outer": Vec3(-0.0450, 0.0520, -0.030),
        "right_eye_outer": Vec3(0.0450, 0.0520, -0.030),
        "left_mouth": Vec3(-0.0300, -0.0450, -0.025),
        "right_mouth": Vec3(0.0300, -0.0450, -0.025),
    }


def generate_trace(params: GeneratorParams) -> list[TraceRecord]:
    """Deterministic synthetic trace with embedded ground-truth annotations."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    segments, total = _build_timeline(params)
    amplitude = (
        params.excursion
        if params.excursion is not None
        else _DEFAULT_EXCURSION[params.exercise]
    )

    annotations: list[AnnotationRecord] = []
    annotations.append(
        AnnotationRecord(
            timestamp=0.0,
            kind="exercise",
            data={
                "name": params.exercise,
                "repetitions": 0 if params.idle_seconds > 0 else params.repetitions,
                "amplitude": amplitude,
            },
        )
    )
    for seg in segments:
        if seg.kind == "rep":
            annotations.append(
                AnnotationRecord(seg.start, "rep_start", {"index": seg.rep_index})
            )
            annotations.append(
                AnnotationRecord(seg.start + seg.duration, "rep_end", {"index": seg.rep_index})
            )

    intervals = _attention_intervals(params, total)
    planted = []
    for start, end, label in intervals:
        yaw, pitch, roll, translation = _planted_pose(rng, label)
        planted.append((start, end, label, yaw, pitch, roll, translation))
        annotations.append(
            AnnotationRecord(
                timestamp=start,
                kind="attention",
                data={
                    "label": label,
                    "yaw": yaw,
                    "pitch": pitch,
                    "roll": roll,
                    "translation": [translation.x, translation.y, translation.z],
                },
            )
        )

    # Skeleton stream.
    n_frames = int(math.floor(total * params.frame_rate))
    frame_noise = (
        rng.normal(0.0, params.joint_noise, size=(n_frames, len(JointId), 3))
        if params.joint_noise > 0
        else None
    )
    joint_order = list(JointId)
    skeletons: list[SkeletonRecord] = []
    for i in range(n_frames):
        t = i / params.frame_rate
        joints = dict(_BASE_JOINTS)
        joints.update(_left_arm(_wrist_at(segments, params.exercise, amplitude, t)))
        if frame_noise is not None:
            joints = {
                j: joints[j] + Vec3(*frame_noise[i, k]) for k, j in enumerate(joint_order)
            }
        confidence = {j: 1.0 for j in joints}
        skeletons.append(SkeletonRecord(SkeletonFrame(t, joints, confidence)))

    # Facial landmark stream.
    model_pts = _face_model_points()
    n_lm = int(math.floor(total * params.landmark_rate))
    lm_noise = (
        rng.normal(0.0, params.landmark_noise, size=(n_lm, len(FACE_POINT_NAMES) + 12, 2))
        if params.landmark_noise > 0
        else None
    )
    landmark_records: list[LandmarkRecord] = []
    for j in range(n_lm):
        t = j / params.landmark_rate
        idx = 0
        for start, end, label, yaw, pitch, roll, translation in planted:
            if t < end:
                break
            idx += 1
        _, _, label, yaw, pitch, roll, translation = planted[min(idx, len(planted) - 1)]
        pose = RigidPose(rotation_from_euler(yaw, pitch, roll), translation)
        projected = {
            name: project_point(model_pts[name], pose, params.intrinsics)
            for name in FACE_POINT_NAMES
        }
        inner = {
            "left": project_point(
                model_pts["left_eye_outer"] + Vec3(_EYE_INNER_OFFSET, 0.0, 0.0),
                pose, params.intrinsics),
            "right": project_point(
                model_pts["right_eye_outer"] - Vec3(_EYE_INNER_OFFSET, 0.0, 0.0),
                pose, params.intrinsics),
        }
        ear = _EAR_CLOSED if label == "facing_robot_eyes_closed" else _EAR_OPEN
        left_eye = _eye_points(projected["left_eye_outer"], inner["left"], ear)
        right_eye = _eye_points(projected["right_eye_outer"], inner["right"], ear)
        if lm_noise is not None:
            noise = lm_noise[j]
            projected = {
                name: (u + noise[k, 0], v + noise[k, 1])
                for k, (name, (u, v)) in enumerate(projected.items())
            }
            left_eye = tuple(
                (u + noise[6 + k, 0], v + noise[6 + k, 1]) for k, (u, v) in enumerate(left_eye)
            )
            right_eye = tuple(
                (u + noise[12 + k, 0], v + noise[12 + k, 1]) for k, (u, v) in enumerate(right_eye)
            )
        landmark_records.append(
            LandmarkRecord(
                landmarks=LandmarkSet2D(timestamp=t, points=projected),
                left_eye=EyeLandmarks(points=left_eye),
                right_eye=EyeLandmarks(points=right_eye),
            )
        )

    speech = [
        SpeechRecord(SpeechEvent(timestamp=t, keyword=keyword))
        for t, keyword in params.speech_script
    ]

    merged: list[TraceRecord] = [*annotations, *skeletons, *landmark_records, *speech]
    merged.sort(key=lambda r: (r.timestamp, _TYPE_PRIORITY[record_type(r)]))
    return merged
