"""Mapping of observed human arm geometry onto four robot arm joints.

The solve works on the left arm: normals of the torso plane, shoulder and
elbow are crossed out of the observed points, and the four joint angles
come from dot products of the normalized vectors. A right-side observation
is first reflected across the body midline plane (through the shoulder
midpoint, perpendicular to the shoulder line) and the solved S0/E0 are
negated, which is how the mirrored joint axes come out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateArm, DegenerateConfiguration
from .geometry import Timestamp, Vec3, cross, normalize

# Cross products below this magnitude (on normalized inputs) leave a
# normal undefined.
NORMAL_EPS = 1e-6


@dataclass(frozen=True)
class ArmObservation:
    """Torso, both shoulders, elbow and hand of the active arm, one instant."""

    torso: Vec3
    shoulder: Vec3
    opposite_shoulder: Vec3
    elbow: Vec3
    hand: Vec3
    side: str  # "left" | "right"
    timestamp: Timestamp = 0.0

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be left or right, got {self.side!r}")
        pts = [self.torso, self.shoulder, self.opposite_shoulder, self.elbow, self.hand]
        for i, a in enumerate(pts):
            for b in pts[i + 1 :]:
                if (a - b).norm() <= 1e-6:
                    raise ValueError("arm observation points must be pairwise separated")


@dataclass(frozen=True)
class RobotArmModel:
    """Joint limits (radians) and link lengths (meters) of one robot arm."""

    s0_limits: tuple[float, float] = (-1.70, 1.70)
    s1_limits: tuple[float, float] = (-2.15, 1.05)
    e0_limits: tuple[float, float] = (-3.05, 3.05)
    e1_limits: tuple[float, float] = (0.05, 2.62)
    upper_arm_length: float = 0.37
    forearm_length: float = 0.37

    def __post_init__(self):
        for lo, hi in (self.s0_limits, self.s1_limits, self.e0_limits, self.e1_limits):
            if not lo < hi:
                raise ValueError("joint limits must satisfy min < max")
        if not (self.upper_arm_length > 0 and self.forearm_length > 0):
            raise ValueError("link lengths must be positive")


@dataclass(frozen=True)
class RobotJointAngles:
    s0: float
    s1: float
    e0: float
    e1: float
    timestamp: Timestamp = 0.0
    # Pre-clamp values; motion thresholds compare these so a joint pinned
    # at a limit cannot mask (or fake) human motion. None means the main
    # fields are already unclamped.
    raw: tuple[float, float, float, float] | None = None

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.s0, self.s1, self.e0, self.e1)

    def raw_tuple(self) -> tuple[float, float, float, float]:
        return self.raw if self.raw is not None else self.as_tuple()


def scale_to_robot(obs: ArmObservation, model: RobotArmModel) -> ArmObservation:
    """Reposition elbow and hand so segment lengths match the robot's links.

    Directions from the shoulder chain are preserved; only distances change.
    Raises DegenerateArm when a human segment is too short to carry a direction.
    """
    upper = obs.elbow - obs.shoulder
    fore = obs.hand - obs.elbow
    if upper.norm() <= 1e-3 or fore.norm() <= 1e-3:
        raise DegenerateArm("arm segments shorter than 1 mm cannot be scaled")
    elbow = obs.shoulder + normalize(upper) * model.upper_arm_length
    hand = elbow + normalize(fore) * model.forearm_length
    return ArmObservation(
        torso=obs.torso,
        shoulder=obs.shoulder,
        opposite_shoulder=obs.opposite_shoulder,
        elbow=elbow,
        hand=hand,
        side=obs.side,
        timestamp=obs.timestamp,
    )


def mirror_observation(obs: ArmObservation) -> ArmObservation:
    """Reflect all points across the plane through the shoulder midpoint,
    perpendicular to the shoulder line. Swaps the observation's handedness."""
    mid = (obs.shoulder + obs.opposite_shoulder) * 0.5
    axis = normalize(obs.shoulder - obs.opposite_shoulder)

    def reflect(p: Vec3) -> Vec3:
        return p - axis * (2.0 * (p - mid).dot(axis))

    return ArmObservation(
        torso=reflect(obs.torso),
        shoulder=reflect(obs.shoulder),
        opposite_shoulder=reflect(obs.opposite_shoulder),
        elbow=reflect(obs.elbow),
        hand=reflect(obs.hand),
        side="left" if obs.side == "right" else "right",
        timestamp=obs.timestamp,
    )


def _partial_normals(obs: ArmObservation) -> tuple[Vec3, Vec3, Vec3, Vec3 | None]:
    """Torso/down/shoulder normals plus the elbow normal, None for a straight arm."""
    tn = cross(obs.opposite_shoulder - obs.torso, obs.shoulder - obs.torso)
    if tn.norm() <= NORMAL_EPS:
        raise DegenerateConfiguration("torso and shoulders are collinear")
    tn = normalize(tn)

    down = cross(tn, obs.shoulder - obs.opposite_shoulder)
    if down.norm() <= NORMAL_EPS:
        raise DegenerateConfiguration("shoulder line degenerate against torso normal")
    down = normalize(down)

    sn = cross(down, obs.shoulder - obs.elbow)
    if sn.norm() <= NORMAL_EPS:
        raise DegenerateConfiguration("upper arm is parallel to the down direction")
    sn = normalize(sn)

    en = cross(obs.elbow - obs.hand, obs.elbow - obs.shoulder)
    return tn, down, sn, (normalize(en) if en.norm() > NORMAL_EPS else None)


def compute_normals(obs: ArmObservation) -> tuple[Vec3, Vec3, Vec3, Vec3]:
    """Normalized torso, down, shoulder and elbow normals of a left-arm observation.

    Raises DegenerateConfiguration when collinear torso/shoulder points or a
    fully straight arm leave a normal undefined.
    """
    tn, down, sn, en = _partial_normals(obs)
    if en is None:
        raise DegenerateConfiguration("straight arm leaves the elbow normal undefined")
    return tn, down, sn, en


def _clamped_acos(x: float) -> float:
    return math.acos(max(-1.0, min(1.0, x)))


def compute_joint_angles(
    obs: ArmObservation, previous_e0: float | None = None
) -> RobotJointAngles:
    """Unclamped joint angles from the normal vectors.

    S0 = -acos(Tn . Sn), S1 = acos(down . unit(S - E)),
    E0 = -acos(Tn . En), E1 = pi - acos(unit(E - H) . unit(E - S)).

    A fully straight arm leaves En undefined; in that case E0 holds its
    previous value (0.0 on the first frame) while the other three angles
    are still computed. Right-side observations are mirrored to a left-arm
    problem and S0/E0 of the solution are negated.
    """
    if obs.side == "right":
        left = compute_joint_angles(mirror_observation(obs), previous_e0)
        return RobotJointAngles(-left.s0, left.s1, -left.e0, left.e1, obs.timestamp)

    tn, down, sn, en = _partial_normals(obs)
    if en is not None:
        e0 = -_clamped_acos(tn.dot(en))
    else:
        e0 = previous_e0 if previous_e0 is not None else 0.0

    s0 = -_clamped_acos(tn.dot(sn))
    s1 = _clamped_acos(down.dot(normalize(obs.shoulder - obs.elbow)))
    e1 = math.pi - _clamped_acos(
        normalize(obs.elbow - obs.hand).dot(normalize(obs.elbow - obs.shoulder))
    )
    return RobotJointAngles(s0, s1, e0, e1, obs.timestamp)


def _clamp(value: float, limits: tuple[float, float]) -> float:
    return max(limits[0], min(limits[1], value))


def clamp_to_limits(angles: RobotJointAngles, model: RobotArmModel) -> RobotJointAngles:
    return RobotJointAngles(
        s0=_clamp(angles.s0, model.s0_limits),
        s1=_clamp(angles.s1, model.s1_limits),
        e0=_clamp(angles.e0, model.e0_limits),
        e1=_clamp(angles.e1, model.e1_limits),
        timestamp=angles.timestamp,
        raw=angles.raw_tuple(),
    )


def apply_motion_thresholds(
    previous: RobotJointAngles,
    candidate: RobotJointAngles,
    model: RobotArmModel,
    *,
    tiny: float = 0.02,
    large: float = 1.0,
) -> RobotJointAngles | None:
    """Suppress jitter and reject instability spikes.

    Returns None when every per-joint delta is below `tiny` (nothing worth
    moving) or when any delta exceeds `large` (likely a skeleton glitch);
    otherwise the candidate clamped into the robot's joint limits. Deltas
    are measured on pre-clamp values.
    """
    deltas = [
        abs(c - p) for c, p in zip(candidate.raw_tuple(), previous.raw_tuple())
    ]
    if all(d < tiny for d in deltas):
        return None
    if any(d > large for d in deltas):
        return None
    return clamp_to_limits(candidate, model)


def retarget(
    obs: ArmObservation,
    model: RobotArmModel,
    previous: RobotJointAngles | None = None,
    *,
    tiny: float = 0.02,
    large: float = 1.0,
) -> RobotJointAngles | None:
    """Full chain: scale to the robot, solve angles, threshold, clamp.

    The first frame (previous None) bypasses the motion thresholds but is
    still clamped into the joint limits.
    """
    scaled = scale_to_robot(obs, model)
    angles = compute_joint_angles(scaled, previous.raw_tuple()[2] if previous else None)
    if previous is None:
        return clamp_to_limits(angles, model)
    return apply_motion_thresholds(previous, angles, model, tiny=tiny, large=large)
