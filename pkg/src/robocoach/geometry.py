"""Geometric and temporal primitives shared by the whole pipeline.

Coordinate convention, fixed once for every module: right-handed camera
frame with x to the right, y up, and z pointing from the camera toward
the subject. All trace data is expressed in this frame, in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BehindCamera, DegenerateVector

# Vectors shorter than this are treated as directionless. Far below
# skeleton sensor noise (~1e-2 m).
DEGENERACY_EPS = 1e-9

# Minimum depth (m) in front of the camera for a projectable point.
MIN_DEPTH = 1e-6

Timestamp = float


class JointId(Enum):
    """Closed set of skeleton joints; unknown names are rejected at parse time."""

    HEAD = "head"
    NECK = "neck"
    TORSO = "torso"
    LEFT_SHOULDER = "left_shoulder"
    RIGHT_SHOULDER = "right_shoulder"
    LEFT_ELBOW = "left_elbow"
    RIGHT_ELBOW = "right_elbow"
    LEFT_WRIST = "left_wrist"
    RIGHT_WRIST = "right_wrist"
    LEFT_HAND = "left_hand"
    RIGHT_HAND = "right_hand"
    LEFT_HIP = "left_hip"
    RIGHT_HIP = "right_hip"


@dataclass(frozen=True)
class Vec3:
    """3D point or vector. Components must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"Vec3 components must be finite, got ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


def normalize(v: Vec3) -> Vec3:
    """Unit vector along v.

    Raises DegenerateVector when |v| <= DEGENERACY_EPS.
    """
    n = v.norm()
    if n <= DEGENERACY_EPS:
        raise DegenerateVector(f"cannot normalize vector of length {n}")
    return Vec3(v.x / n, v.y / n, v.z / n)


def cross(a: Vec3, b: Vec3) -> Vec3:
    """Cross product a x b. A zero vector is a valid result for parallel inputs."""
    return Vec3(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )


def angle_between(a: Vec3, b: Vec3) -> float:
    """Angle in [0, pi] between two non-degenerate vectors.

    The normalized dot product is clamped to [-1, 1] before arccos so that
    floating-point overshoot (~1e-16 on unit vectors) never produces NaN.
    """
    na, nb = a.norm(), b.norm()
    if na <= DEGENERACY_EPS or nb <= DEGENERACY_EPS:
        raise DegenerateVector("angle_between requires non-degenerate vectors")
    c = a.dot(b) / (na * nb)
    return math.acos(max(-1.0, min(1.0, c)))


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera parameters in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


# Rotation matrices are validated as orthonormal, det +1, to this tolerance.
ROTATION_TOL = 1e-9


def _check_rotation(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {r.shape}")
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > ROTATION_TOL or abs(np.linalg.det(r) - 1.0) > ROTATION_TOL:
        raise ValueError(f"rotation is not orthonormal with det +1 (deviation {err:.2e})")
    return r


@dataclass(frozen=True)
class RigidPose:
    """Rotation (3x3 orthonormal, det +1) plus translation, camera frame."""

    rotation: np.ndarray
    translation: Vec3

    def __post_init__(self):
        object.__setattr__(self, "rotation", _check_rotation(self.rotation))

    def transform(self, p: Vec3) -> Vec3:
        q = self.rotation @ p.as_array()
        return Vec3.from_array(q) + self.translation

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.eye(3), Vec3(0.0, 0.0, 0.0))


def project_point(p: Vec3, pose: RigidPose, k: CameraIntrinsics) -> tuple[float, float]:
    """Pinhole projection of p under pose: u = fx*x'/z' + cx, v = fy*y'/z' + cy.

    Raises BehindCamera when the transformed depth z' <= MIN_DEPTH.
    """
    q = pose.transform(p)
    if q.z <= MIN_DEPTH:
        raise BehindCamera(f"point projects at depth {q.z:.3g} m")
    return (k.fx * q.x / q.z + k.cx, k.fy * q.y / q.z + k.cy)


@dataclass(frozen=True)
class SkeletonFrame:
    """Timestamped 3D joint positions and per-joint confidences for one person."""

    timestamp: Timestamp
    joints: dict[JointId, Vec3]
    confidence: dict[JointId, float]

    def position(self, joint: JointId) -> Vec3 | None:
        return self.joints.get(joint)

    def joint_confidence(self, joint: JointId) -> float:
        return self.confidence.get(joint, 1.0)


# --- rotation helpers -------------------------------------------------------
#
# Euler convention used everywhere: intrinsic yaw-pitch-roll, i.e.
# R = Ry(yaw) @ Rx(pitch) @ Rz(roll). Downstream attention thresholds
# depend on this ordering.


def rotation_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_euler(yaw: float, pitch: float, roll: float) -> np.ndarray:
    return rotation_y(yaw) @ rotation_x(pitch) @ rotation_z(roll)


def euler_from_rotation(r: np.ndarray) -> tuple[float, float, float]:
    """Recover (yaw, pitch, roll) from R = Ry(yaw) @ Rx(pitch) @ Rz(roll)."""
    r = np.asarray(r, dtype=float)
    sp = -r[1, 2]
    if abs(sp) >= 1.0 - 1e-12:
        # Gimbal lock: only yaw -/+ roll is observable; report roll = 0.
        pitch = math.copysign(math.pi / 2.0, sp)
        if sp > 0:
            yaw = math.atan2(r[0, 1], r[0, 0])
        else:
            yaw = math.atan2(-r[0, 1], r[0, 0])
        return (yaw, pitch, 0.0)
    pitch = math.asin(max(-1.0, min(1.0, sp)))
    yaw = math.atan2(r[0, 2], r[2, 2])
    roll = math.atan2(r[1, 0], r[1, 1])
    return (yaw, pitch, roll)


def skew(w: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]]
    )


def rodrigues(w: np.ndarray) -> np.ndarray:
    """Rotation matrix for an axis-angle vector w (angle = |w|)."""
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    k = skew(w)
    if theta < 1e-10:
        # Second-order series; exact enough at these magnitudes.
        return np.eye(3) + k + 0.5 * (k @ k)
    return np.eye(3) + (math.sin(theta) / theta) * k + ((1.0 - math.cos(theta)) / theta**2) * (k @ k)


def nearest_rotation(m: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a 3x3 matrix onto SO(3)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def rotation_angle(r: np.ndarray) -> float:
    """Angle in [0, pi] of a rotation matrix; usable as a rotation distance."""
    c = (float(np.trace(r)) - 1.0) / 2.0
    return math.acos(max(-1.0, min(1.0, c)))
