"""Exception hierarchy shared by all robocoach modules."""


class CoachError(Exception):
    """Base class for every error raised by this package."""


class DegenerateVector(CoachError):
    """A vector too close to zero length was passed where a direction is required."""


class BehindCamera(CoachError):
    """A point has non-positive depth in the camera frame and cannot be projected."""


class TooFewPoints(CoachError):
    """A path operation needs more points than were supplied."""


class MissingJoint(CoachError):
    """A skeleton frame lacks a joint required by the requested operation."""


class NonMonotonicTimestamp(CoachError):
    """An input timestamp moved backwards within a stream that must be ordered."""


class DegenerateConfiguration(CoachError):
    """A geometric configuration (collinear points, rank-deficient system) admits no solution."""


class DivergedPose(CoachError):
    """The pose refinement damping exceeded its limit without finding a downhill step."""


class DegenerateEye(CoachError):
    """Eye corner landmarks coincide, so no aspect ratio is defined."""


class DegenerateArm(CoachError):
    """Arm joints coincide or are too close to define segment directions."""


class UnknownKeyword(CoachError):
    """A speech keyword outside the fixed vocabulary reached the monitor."""


class OutOfOrderInput(CoachError):
    """A session controller input arrived with a timestamp earlier than its predecessor."""


class InvalidTransition(CoachError):
    """An input type the session controller does not recognize."""


class ParseError(CoachError):
    """A trace line could not be parsed.

    Carries the 1-based line number and a human-readable reason.
    """

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class UnsortedTrace(CoachError):
    """A trace record is timestamped earlier than the record before it."""

    def __init__(self, line_number: int):
        self.line_number = line_number
        super().__init__(f"line {line_number}: records are not sorted by timestamp")


class InvalidParams(CoachError):
    """Generator parameters outside their documented domain."""


class MissingAnnotations(CoachError):
    """Evaluation was requested on a trace that carries no ground-truth annotations."""


class ConfigError(CoachError):
    """A configuration file or value could not be interpreted."""


class IoFailure(CoachError):
    """A file could not be read or written."""
