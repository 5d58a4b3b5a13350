"""Coach session state machine with three feedback policies.

The controller is a deterministic function of (config, ordered inputs):
ticks drive the phase clock, rep events drive counting and feedback,
interruption events drive pauses, attention restoration, and the
absorbing emergency stop. Utterance texts are configuration data, not
logic; the defaults live in config.DEFAULT_TEXTS.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

from .attention import InterruptionEvent, SpeechEvent
from .errors import InvalidTransition, OutOfOrderInput
from .exercise import RepEvent
from .geometry import Timestamp
from .retarget import RobotJointAngles

log = logging.getLogger(__name__)


class FeedbackPolicy(Enum):
    LOW_STIMULUS = "low_stimulus"
    TURN_BASED = "turn_based"
    MIMICKING = "mimicking"


class Phase(Enum):
    INTRO = "intro"
    EXERCISE_SETUP = "exercise_setup"
    EXERCISE_ACTIVE = "exercise_active"
    FEEDBACK = "feedback"
    ATTENTION_RESTORE = "attention_restore"
    PAUSED = "paused"
    EMERGENCY_STOP = "emergency_stop"
    SESSION_END = "session_end"


COMMAND_KINDS = ("say", "display", "demonstrate", "mirror", "wave", "stop_motion")


@dataclass(frozen=True)
class Tick:
    """Clock input; one per perception frame is enough."""

    timestamp: Timestamp


@dataclass(frozen=True)
class AttentionRestored:
    """The person is attentive again after an attention-lost interruption."""

    timestamp: Timestamp


@dataclass(frozen=True)
class BehaviorCommand:
    timestamp: Timestamp
    kind: str
    text: str | None = None
    exercise: str | None = None
    angles: RobotJointAngles | None = None
    provenance: Phase = Phase.INTRO

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {self.kind!r}")


@dataclass(frozen=True)
class SessionConfig:
    exercises: tuple[str, ...] = ("shoulder_press", "side_lateral_raise")
    repetitions: int = 5
    policy: FeedbackPolicy = FeedbackPolicy.TURN_BASED
    pause_timeout: float = 120.0
    texts: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.exercises) < 1:
            raise ValueError("a session needs at least one exercise")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def text(self, key: str, **fmt) -> str:
        template = self.texts.get(key, key)
        return template.format(**fmt) if fmt else template


@dataclass(frozen=True)
class StateTransition:
    timestamp: Timestamp
    source: Phase
    target: Phase
    cause: str


class SessionController:
    """Single-threaded event loop owner for one coaching session."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.phase = Phase.INTRO
        self.exercise_index = 0
        self.reps_done = 0
        self.completed: dict[str, int] = {name: 0 for name in config.exercises}
        self._resume_phase = Phase.EXERCISE_ACTIVE
        self._paused_at: Timestamp | None = None
        self._last_t: Timestamp | None = None
        self._log: list[BehaviorCommand] = []
        self.transitions: list[StateTransition] = []
        # Commands and transitions interleaved in emission order, for logs.
        self.journal: list[BehaviorCommand | StateTransition] = []
        self.discarded_inputs = 0

    # -- public API ----------------------------------------------------------

    def step(self, event) -> list[BehaviorCommand]:
        """Consume one input, mutate state, and return the commands it caused."""
        t = getattr(event, "timestamp", None)
        if t is None:
            raise InvalidTransition(f"input without timestamp: {event!r}")
        if self._last_t is not None and t < self._last_t:
            raise OutOfOrderInput(f"input at t={t} after t={self._last_t}")
        self._last_t = t

        before = len(self._log)
        if isinstance(event, Tick):
            self._on_tick(t)
        elif isinstance(event, RepEvent):
            self._on_rep(event)
        elif isinstance(event, InterruptionEvent):
            self._on_interruption(event)
        elif isinstance(event, SpeechEvent):
            self._on_speech(event)
        elif isinstance(event, RobotJointAngles):
            self._on_angles(event)
        elif isinstance(event, AttentionRestored):
            self._on_restored(event)
        else:
            raise InvalidTransition(f"unsupported input type {type(event).__name__}")
        return self._log[before:]

    def command_log(self) -> tuple[BehaviorCommand, ...]:
        """Complete, append-only transcript of every emitted command."""
        return tuple(self._log)

    def current_exercise(self) -> str | None:
        if self.exercise_index < len(self.config.exercises):
            return self.config.exercises[self.exercise_index]
        return None

    def operator_reset(self, t: Timestamp):
        """Explicit operator action; the only way out of the emergency stop."""
        if self.phase is not Phase.EMERGENCY_STOP:
            raise InvalidTransition("operator reset is only valid from emergency_stop")
        self._last_t = max(self._last_t or t, t)
        if self.current_exercise() is None:
            self._transition(t, Phase.SESSION_END, "operator_reset")
        else:
            self._enter_setup(t, "operator_reset")

    # -- emission helpers ----------------------------------------------------

    def _emit(self, t: Timestamp, kind: str, **kw):
        cmd = BehaviorCommand(timestamp=t, kind=kind, provenance=self.phase, **kw)
        self._log.append(cmd)
        self.journal.append(cmd)

    def _transition(self, t: Timestamp, target: Phase, cause: str):
        tr = StateTransition(t, self.phase, target, cause)
        self.transitions.append(tr)
        self.journal.append(tr)
        self.phase = target

    def _enter_setup(self, t: Timestamp, cause: str):
        name = self.config.exercises[self.exercise_index]
        self._transition(t, Phase.EXERCISE_SETUP, cause)
        self._emit(t, "say", text=self.config.text(
            "goal", exercise=name.replace("_", " "), target=self.config.repetitions))
        self._emit(t, "display", text=self.config.text(
            "display_goal", exercise=name.replace("_", " "), target=self.config.repetitions))
        self._emit(t, "demonstrate", exercise=name)
        self._emit(t, "say", text=self.config.text("trigger"))

    def _enter_session_end(self, t: Timestamp, cause: str):
        self._transition(t, Phase.SESSION_END, cause)
        self._emit(t, "say", text=self.config.text("farewell"))

    def _discard(self, event, why: str):
        self.discarded_inputs += 1
        log.warning("discarded %s: %s", type(event).__name__, why)

    # -- input handlers ------------------------------------------------------

    def _on_tick(self, t: Timestamp):
        if self.phase is Phase.INTRO:
            self._emit(t, "say", text=self.config.text("intro"))
            self._enter_setup(t, "intro_done")
        elif self.phase is Phase.EXERCISE_SETUP:
            self._transition(t, Phase.EXERCISE_ACTIVE, "setup_done")
        elif self.phase is Phase.FEEDBACK:
            self._transition(t, Phase.EXERCISE_ACTIVE, "feedback_done")
        elif self.phase is Phase.PAUSED:
            if self._paused_at is not None and t - self._paused_at >= self.config.pause_timeout:
                self._enter_session_end(t, "pause_timeout")

    def _on_rep(self, event: RepEvent):
        t = event.timestamp
        if self.phase not in (Phase.EXERCISE_ACTIVE, Phase.FEEDBACK):
            self._discard(event, f"rep event while {self.phase.value}")
            return
        feedback = self.config.policy is not FeedbackPolicy.LOW_STIMULUS
        if event.verdict == "correct":
            self.reps_done += 1
            name = self.config.exercises[self.exercise_index]
            self.completed[name] = self.reps_done
            if feedback:
                if self.phase is not Phase.FEEDBACK:
                    self._transition(t, Phase.FEEDBACK, "rep_correct")
                self._emit(t, "say", text=self.config.text(
                    "rep_feedback", count=self.reps_done, target=self.config.repetitions))
            if self.reps_done >= self.config.repetitions:
                self.exercise_index += 1
                self.reps_done = 0
                if self.exercise_index < len(self.config.exercises):
                    self._enter_setup(t, "exercise_complete")
                else:
                    self._enter_session_end(t, "all_exercises_complete")
        else:
            if feedback:
                if self.phase is not Phase.FEEDBACK:
                    self._transition(t, Phase.FEEDBACK, "rep_incorrect")
                self._emit(t, "say", text=self.config.text(
                    f"corrective.{event.failure_reason}"))

    def _on_angles(self, angles: RobotJointAngles):
        if self.config.policy is not FeedbackPolicy.MIMICKING:
            return
        if self.phase in (Phase.EXERCISE_ACTIVE, Phase.FEEDBACK):
            self._emit(angles.timestamp, "mirror", angles=angles)

    def _on_interruption(self, event: InterruptionEvent):
        t = event.timestamp
        if event.kind == "emergency":
            if self.phase is Phase.EMERGENCY_STOP:
                self._discard(event, "already stopped")
                return
            self._transition(t, Phase.EMERGENCY_STOP, "emergency")
            self._emit(t, "stop_motion")
            self._emit(t, "say", text=self.config.text("emergency"))
        elif event.kind == "user_stop":
            if self.phase in (Phase.EMERGENCY_STOP, Phase.SESSION_END, Phase.PAUSED):
                self._discard(event, f"stop while {self.phase.value}")
                return
            self._resume_phase = (
                self._resume_phase if self.phase is Phase.ATTENTION_RESTORE else self.phase
            )
            self._paused_at = t
            self._transition(t, Phase.PAUSED, "user_stop")
            self._emit(t, "stop_motion")
            self._emit(t, "say", text=self.config.text("paused"))
        elif event.kind == "attention_lost":
            if self.phase not in (
                Phase.INTRO, Phase.EXERCISE_SETUP, Phase.EXERCISE_ACTIVE, Phase.FEEDBACK,
            ):
                self._discard(event, f"attention_lost while {self.phase.value}")
                return
            self._resume_phase = self.phase
            self._transition(t, Phase.ATTENTION_RESTORE, "attention_lost")
            self._emit(t, "wave")
            self._emit(t, "say", text=self.config.text("restore_query"))
        else:
            raise InvalidTransition(f"unknown interruption kind {event.kind!r}")

    def _on_restored(self, event: AttentionRestored):
        if self.phase is not Phase.ATTENTION_RESTORE:
            return
        self._transition(event.timestamp, self._resume_phase, "attention_restored")

    def _on_speech(self, event: SpeechEvent):
        if event.keyword != "start":
            # Other keywords reach the controller as InterruptionEvents.
            self._discard(event, f"speech {event.keyword!r} handled by the monitor")
            return
        if self.phase is Phase.PAUSED:
            self._paused_at = None
            self._transition(event.timestamp, self._resume_phase, "user_start")
            self._emit(event.timestamp, "say", text=self.config.text("resume"))
        else:
            self._discard(event, f"start while {self.phase.value}")
