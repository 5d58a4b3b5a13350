"""Fusion of attention direction, body activity, and speech keywords.

The monitor keeps a three-state label (attentive / distracted / interrupted).
Sustained distraction promotes to interrupted and emits a single
attention-lost event per episode; emergency keywords preempt regardless of
the current label.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NonMonotonicTimestamp, UnknownKeyword
from .geometry import Timestamp

KEYWORDS = ("start", "stop", "help", "hurts", "emergency")
EMERGENCY_KEYWORDS = ("help", "hurts", "emergency")

ATTENTION_LABELS = ("attentive", "distracted", "interrupted")


@dataclass(frozen=True)
class SpeechEvent:
    """A recognized keyword; matching is case-insensitive exact-token."""

    timestamp: Timestamp
    keyword: str

    def __post_init__(self):
        object.__setattr__(self, "keyword", self.keyword.lower())
        if self.keyword not in KEYWORDS:
            raise UnknownKeyword(f"keyword {self.keyword!r} outside {KEYWORDS}")


@dataclass(frozen=True)
class InterruptionEvent:
    timestamp: Timestamp
    kind: str  # "attention_lost" | "user_stop" | "emergency"
    source: str  # "visual" | "speech"


@dataclass
class AttentionState:
    label: str = "attentive"
    label_since: Timestamp = 0.0
    seconds_in_label: float = 0.0
    last_direction: str | None = None


class AttentionMonitor:
    """Single-owner monitor; ingest events in timestamp order."""

    def __init__(self, timeout: float = 5.0):
        self.timeout = timeout
        self.state = AttentionState()
        self._last_t: Timestamp | None = None
        self._episode_fired = False

    def ingest_frame(
        self, t: Timestamp, direction: str | None, person_moving: bool
    ) -> InterruptionEvent | None:
        """Fuse one visual observation.

        direction is a head_pose attention label, or None when no estimate
        was available (a missing face counts as distracted). Returns an
        attention-lost event exactly once per sustained distracted episode.
        """
        if self._last_t is not None and t < self._last_t:
            raise NonMonotonicTimestamp(f"t={t} precedes previous t={self._last_t}")
        if self._last_t is None:
            # First observation defines the episode origin.
            self.state.label_since = t
        self._last_t = t

        self.state.last_direction = direction
        attentive = direction == "facing_robot_eyes_open" or person_moving

        if attentive:
            self._set_label("attentive", t)
            self._episode_fired = False
        elif self.state.label == "attentive":
            self._set_label("distracted", t)
        self.state.seconds_in_label = t - self.state.label_since

        if (
            self.state.label == "distracted"
            and not self._episode_fired
            and self.state.seconds_in_label >= self.timeout
        ):
            self._set_label("interrupted", t)
            self._episode_fired = True
            return InterruptionEvent(timestamp=t, kind="attention_lost", source="visual")
        return None

    def ingest_speech(self, ev: SpeechEvent) -> InterruptionEvent | None:
        """Emergency keywords preempt immediately; "stop" requests a pause.

        "start" is a session-control signal, not an interruption, and is
        passed through to the session controller by the caller.
        """
        if ev.keyword in EMERGENCY_KEYWORDS:
            return InterruptionEvent(timestamp=ev.timestamp, kind="emergency", source="speech")
        if ev.keyword == "stop":
            return InterruptionEvent(timestamp=ev.timestamp, kind="user_stop", source="speech")
        if ev.keyword == "start":
            return None
        raise UnknownKeyword(f"keyword {ev.keyword!r} outside {KEYWORDS}")

    def _set_label(self, label: str, t: Timestamp):
        if label != self.state.label:
            self.state.label = label
            self.state.label_since = t
            self.state.seconds_in_label = 0.0
