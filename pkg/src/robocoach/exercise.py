"""Online exercise recognition, correctness classification, and rep counting.

A repetition attempt is segmented with hysteresis on the tracked joint's
excursion above the anchor joint: it begins when the joint is inside the
exercise's region of interest and rises past 20% of the minimum excursion,
and it ends when the joint drops back below half of that entry level or
leaves the region. At attempt end the collected path is scored against the
exercise limits (excursion, then path length, then smoothness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import MissingJoint, NonMonotonicTimestamp, TooFewPoints
from .geometry import JointId, SkeletonFrame, Timestamp, Vec3, angle_between

EXERCISE_NAMES = ("shoulder_press", "side_lateral_raise")

# Entry threshold as a fraction of the minimum excursion; exit uses half
# the entry level so jitter near the boundary cannot double-count.
ENTRY_FRACTION = 0.2
EXIT_FRACTION = 0.5

FAILURE_REASONS = (
    "insufficient_excursion",
    "path_too_short",
    "path_too_long",
    "path_not_smooth",
)


@dataclass(frozen=True)
class RegionOfInterest:
    """Axis-aligned box relative to an anchor joint; gates which motion counts."""

    anchor: JointId
    offset: Vec3
    extents: Vec3  # half-widths

    def __post_init__(self):
        if not (self.extents.x > 0 and self.extents.y > 0 and self.extents.z > 0):
            raise ValueError("ROI extents must be strictly positive")


@dataclass(frozen=True)
class ExerciseSpec:
    """Parametric definition of one exercise and its acceptance limits."""

    name: str
    tracked_joint: JointId
    roi: RegionOfInterest
    min_path_length: float
    max_path_length: float
    max_segment_angle: float
    min_excursion: float
    excursion_axis: Vec3 = Vec3(0.0, 1.0, 0.0)
    excursion_zero: float = 0.0
    target_repetitions: int = 5
    min_sample_distance: float = 0.05
    min_confidence: float = 0.3

    def __post_init__(self):
        if self.name not in EXERCISE_NAMES:
            raise ValueError(f"unknown exercise {self.name!r}")
        if not self.min_path_length < self.max_path_length:
            raise ValueError("min path length must be below max path length")
        if self.target_repetitions < 1:
            raise ValueError("target repetitions must be >= 1")
        n = self.excursion_axis.norm()
        if abs(n - 1.0) > 1e-6:
            raise ValueError("excursion axis must be a unit vector")


@dataclass(frozen=True)
class RepEvent:
    """Classified outcome of one exercise attempt."""

    exercise: str
    verdict: str  # "correct" | "incorrect"
    failure_reason: str | None
    path_length: float
    max_segment_angle: float
    excursion: float
    rep_index: int  # correct reps so far, including this one when correct
    timestamp: Timestamp

    def __post_init__(self):
        if (self.verdict == "incorrect") != (self.failure_reason is not None):
            raise ValueError("failure reason present iff verdict is incorrect")


def path_length(points: list[Vec3]) -> float:
    """Total Euclidean length of the polyline, in full 3D.

    Raises TooFewPoints for fewer than two points.
    """
    if len(points) < 2:
        raise TooFewPoints(f"path length needs >= 2 points, got {len(points)}")
    return sum((b - a).norm() for a, b in zip(points, points[1:]))


def _drop_degenerate(points: list[Vec3], eps: float = 1e-6) -> list[Vec3]:
    kept = [points[0]]
    for p in points[1:]:
        if (p - kept[-1]).norm() > eps:
            kept.append(p)
    return kept


def path_angles(points: list[Vec3]) -> list[float]:
    """Turn angle at each interior vertex, after dropping zero-length segments.

    The angle at vertex k+1 is between segment k->k+1 and segment k+1->k+2,
    so a straight continuation scores 0 and a full reversal scores pi.
    """
    if len(points) < 3:
        raise TooFewPoints(f"path angles need >= 3 points, got {len(points)}")
    pts = _drop_degenerate(points)
    if len(pts) < 3:
        raise TooFewPoints("fewer than 3 distinct points after degenerate-segment removal")
    return [
        angle_between(pts[k + 1] - pts[k], pts[k + 2] - pts[k + 1])
        for k in range(len(pts) - 2)
    ]


def roi_contains(frame: SkeletonFrame, roi: RegionOfInterest, joint: JointId) -> bool:
    """True iff the joint lies within the body-relative box of the ROI."""
    anchor = frame.position(roi.anchor)
    pos = frame.position(joint)
    if anchor is None:
        raise MissingJoint(f"frame lacks ROI anchor joint {roi.anchor.value}")
    if pos is None:
        raise MissingJoint(f"frame lacks tracked joint {joint.value}")
    center = anchor + roi.offset
    d = pos - center
    return (
        abs(d.x) <= roi.extents.x
        and abs(d.y) <= roi.extents.y
        and abs(d.z) <= roi.extents.z
    )


@dataclass
class _Counts:
    correct: int = 0
    incorrect: int = 0


class ExerciseEngine:
    """Per-person rep counter. Feed frames sequentially; one instance per person."""

    def __init__(self):
        self._buffer: list[tuple[Timestamp, Vec3]] = []
        self._attempt_active = False
        self._max_excursion = -math.inf
        self._last_t: Timestamp | None = None
        self._current_exercise: str | None = None
        self._counts: dict[str, _Counts] = {}

    def update(self, frame: SkeletonFrame, spec: ExerciseSpec) -> RepEvent | None:
        """Advance the engine by one frame; returns a RepEvent when an attempt ends."""
        if self._last_t is not None and frame.timestamp <= self._last_t:
            raise NonMonotonicTimestamp(
                f"frame at t={frame.timestamp} not after previous t={self._last_t}"
            )
        self._last_t = frame.timestamp

        if spec.name != self._current_exercise:
            self._reset(spec.name)

        anchor = frame.position(spec.roi.anchor)
        pos = frame.position(spec.tracked_joint)
        if anchor is None or pos is None:
            missing = spec.roi.anchor if anchor is None else spec.tracked_joint
            raise MissingJoint(f"frame lacks joint {missing.value}")

        # Brief occlusions should not abort an attempt: skip low-confidence frames.
        if (
            frame.joint_confidence(spec.tracked_joint) < spec.min_confidence
            or frame.joint_confidence(spec.roi.anchor) < spec.min_confidence
        ):
            return None

        inside = roi_contains(frame, spec.roi, spec.tracked_joint)
        if not inside:
            if self._attempt_active:
                return self._finish_attempt(frame.timestamp, spec)
            self._buffer.clear()
            return None

        # Decimated path buffer: a new sample is kept only once the joint
        # has moved min_sample_distance from the last kept sample, which
        # bounds the path-length inflation caused by sensor noise.
        if not self._buffer or (pos - self._buffer[-1][1]).norm() >= spec.min_sample_distance:
            self._buffer.append((frame.timestamp, pos))

        entry = ENTRY_FRACTION * spec.min_excursion
        excursion = (pos - anchor).dot(spec.excursion_axis) - spec.excursion_zero
        if not self._attempt_active:
            if excursion >= entry:
                self._attempt_active = True
                self._max_excursion = excursion
                # Drop dwell samples collected before the rise; keep the
                # approach into the entry band.
                if len(self._buffer) > 2:
                    del self._buffer[:-2]
            return None

        self._max_excursion = max(self._max_excursion, excursion)
        if excursion < EXIT_FRACTION * entry:
            return self._finish_attempt(frame.timestamp, spec)
        return None

    def session_counts(self, exercise: str) -> tuple[int, int]:
        """(correct reps, incorrect attempts) tallied so far for one exercise."""
        c = self._counts.get(exercise)
        return (c.correct, c.incorrect) if c else (0, 0)

    def all_counts(self) -> dict[str, tuple[int, int]]:
        return {name: (c.correct, c.incorrect) for name, c in self._counts.items()}

    def _reset(self, exercise: str | None):
        self._buffer.clear()
        self._attempt_active = False
        self._max_excursion = -math.inf
        self._current_exercise = exercise

    def _finish_attempt(self, t: Timestamp, spec: ExerciseSpec) -> RepEvent:
        points = [p for _, p in self._buffer]
        length = path_length(points) if len(points) >= 2 else 0.0
        try:
            max_angle = max(path_angles(points))
        except TooFewPoints:
            max_angle = 0.0
        excursion = self._max_excursion

        reason = None
        if excursion < spec.min_excursion:
            reason = "insufficient_excursion"
        elif length < spec.min_path_length:
            reason = "path_too_short"
        elif length > spec.max_path_length:
            reason = "path_too_long"
        elif max_angle > spec.max_segment_angle:
            reason = "path_not_smooth"

        counts = self._counts.setdefault(spec.name, _Counts())
        if reason is None:
            counts.correct += 1
        else:
            counts.incorrect += 1

        event = RepEvent(
            exercise=spec.name,
            verdict="correct" if reason is None else "incorrect",
            failure_reason=reason,
            path_length=length,
            max_segment_angle=max_angle,
            excursion=excursion,
            rep_index=counts.correct,
            timestamp=t,
        )
        self._buffer.clear()
        self._attempt_active = False
        self._max_excursion = -math.inf
        return event
