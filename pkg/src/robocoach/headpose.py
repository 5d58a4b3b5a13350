"""Head pose from 2D-3D facial landmark correspondences, plus eye openness.

The pose of a generic six-point face model is recovered in two stages:
a direct linear transform gives a starting pose, and damped Gauss-Newton
(Levenberg-Marquardt) iterations on the six pose parameters (axis-angle
rotation increment plus translation) then minimize the summed squared
pixel reprojection error. Eye openness uses the standard aspect ratio of
six eye landmarks, and the combined result is classified into one of
three attention directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BehindCamera,
    DegenerateConfiguration,
    DegenerateEye,
    DivergedPose,
)
from .geometry import (
    MIN_DEPTH,
    CameraIntrinsics,
    RigidPose,
    Timestamp,
    Vec3,
    euler_from_rotation,
    nearest_rotation,
    rodrigues,
    skew,
)

# Canonical landmark order for building linear systems and residual vectors.
FACE_POINT_NAMES = (
    "nose_tip",
    "chin",
    "left_eye_outer",
    "right_eye_outer",
    "left_mouth",
    "right_mouth",
)

ATTENTION_DIRECTIONS = (
    "facing_robot_eyes_open",
    "facing_robot_eyes_closed",
    "facing_away",
)


@dataclass(frozen=True)
class FaceModel:
    """Six named 3D points in the head-local frame (meters, nose-tip origin)."""

    points: dict[str, Vec3]

    def __post_init__(self):
        missing = [n for n in FACE_POINT_NAMES if n not in self.points]
        if missing:
            raise ValueError(f"face model missing points: {missing}")
        arr = self.as_array()
        cov = np.cov(arr.T)
        if np.linalg.matrix_rank(cov, tol=1e-12) < 3:
            raise ValueError("face model points are coplanar-degenerate")

    def as_array(self) -> np.ndarray:
        return np.array([self.points[n].as_array() for n in FACE_POINT_NAMES])


@dataclass(frozen=True)
class LandmarkSet2D:
    """Detected 2D pixel positions matching the face model point names."""

    timestamp: Timestamp
    points: dict[str, tuple[float, float]]

    def __post_init__(self):
        missing = [n for n in FACE_POINT_NAMES if n not in self.points]
        if missing:
            raise ValueError(f"landmark set missing points: {missing}")
        for n in FACE_POINT_NAMES:
            u, v = self.points[n]
            if not (math.isfinite(u) and math.isfinite(v)):
                raise ValueError(f"landmark {n} is not finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.points[n] for n in FACE_POINT_NAMES], dtype=float)


@dataclass(frozen=True)
class EyeLandmarks:
    """Six 2D points per eye: p1/p4 horizontal corners, p2/p3 upper lid, p5/p6 lower."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.points) != 6:
            raise ValueError("an eye needs exactly 6 landmarks")


@dataclass(frozen=True)
class HeadPoseEstimate:
    pose: RigidPose
    yaw: float
    pitch: float
    roll: float
    rms_error: float  # pixels, per-point RMS reprojection distance
    iterations: int
    converged: bool
    # Summed squared error after the initial evaluation and each accepted step.
    accepted_errors: tuple[float, ...] = field(default=(), repr=False)


def _residual(pose: RigidPose, model_pts: np.ndarray, observed: np.ndarray, k: CameraIntrinsics):
    """Stacked (2N,) residual projected-minus-observed, or None if any point is behind."""
    q = model_pts @ pose.rotation.T + pose.translation.as_array()
    if np.any(q[:, 2] <= MIN_DEPTH):
        return None
    u = k.fx * q[:, 0] / q[:, 2] + k.cx
    v = k.fy * q[:, 1] / q[:, 2] + k.cy
    return np.column_stack([u, v]).ravel() - observed.ravel()


def projection_jacobian(pose: RigidPose, model_pts: np.ndarray, k: CameraIntrinsics) -> np.ndarray:
    """(2N, 6) Jacobian of projected pixels w.r.t. (rotation increment, translation).

    The rotation is perturbed on the left, R <- exp([w]x) R, so column i of
    the rotation block is the derivative along axis-angle component w_i at
    w = 0. Columns 3..5 differentiate along the translation axes.
    """
    r_pts = model_pts @ pose.rotation.T
    q = r_pts + pose.translation.as_array()
    n = model_pts.shape[0]
    jac = np.empty((2 * n, 6))
    for i in range(n):
        x, y, z = q[i]
        d_proj = np.array(
            [[k.fx / z, 0.0, -k.fx * x / z**2], [0.0, k.fy / z, -k.fy * y / z**2]]
        )
        d_pose = np.hstack([-skew(r_pts[i]), np.eye(3)])
        jac[2 * i : 2 * i + 2] = d_proj @ d_pose
    return jac


def _apply_step(pose: RigidPose, delta: np.ndarray) -> RigidPose:
    rot = nearest_rotation(rodrigues(delta[:3]) @ pose.rotation)
    t = pose.translation
    return RigidPose(rot, Vec3(t.x + delta[3], t.y + delta[4], t.z + delta[5]))


def solve_dlt(landmarks: LandmarkSet2D, model: FaceModel, k: CameraIntrinsics) -> RigidPose:
    """Linear least-squares pose from 2D-3D correspondences.

    The 2D points are normalized (centroid to origin, mean distance sqrt(2))
    before the 12-unknown homogeneous system is formed, which keeps the
    system well conditioned. The rotation block of the recovered projection
    matrix is projected onto the nearest orthonormal matrix, so the result
    is approximate and intended as the refinement starting point.
    """
    obs = landmarks.as_array()
    pts = model.as_array()
    n = pts.shape[0]

    centroid = obs.mean(axis=0)
    spread = np.linalg.norm(obs - centroid, axis=1).mean()
    if spread < 1e-9:
        raise DegenerateConfiguration("2D landmarks are coincident")
    s = math.sqrt(2.0) / spread
    t_norm = np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])
    obs_n = (obs - centroid) * s

    a = np.zeros((2 * n, 12))
    for i in range(n):
        xh = np.append(pts[i], 1.0)
        u, v = obs_n[i]
        a[2 * i, 0:4] = xh
        a[2 * i, 8:12] = -u * xh
        a[2 * i + 1, 4:8] = xh
        a[2 * i + 1, 8:12] = -v * xh

    _, sv, vt = np.linalg.svd(a)
    if sv[-2] <= 1e-9 * sv[0]:
        raise DegenerateConfiguration("correspondence system is rank deficient")
    p_norm = vt[-1].reshape(3, 4)
    p = np.linalg.inv(t_norm) @ p_norm

    b = np.linalg.inv(k.matrix()) @ p
    det = np.linalg.det(b[:, :3])
    if abs(det) < 1e-15:
        raise DegenerateConfiguration("projection matrix has singular rotation block")
    if det < 0:
        b = -b
        det = -det
    scale = det ** (1.0 / 3.0)
    rotation = nearest_rotation(b[:, :3] / scale)
    translation = Vec3.from_array(b[:, 3] / scale)
    return RigidPose(rotation, translation)


def refine_lm(
    initial: RigidPose,
    landmarks: LandmarkSet2D,
    model: FaceModel,
    k: CameraIntrinsics,
    *,
    max_iterations: int = 100,
    gradient_tol: float = 1e-8,
    error_change_tol: float = 1e-10,
    lambda0: float = 1e-3,
    lambda_max: float = 1e8,
    converged_rms: float = 5.0,
) -> HeadPoseEstimate:
    """Levenberg-Marquardt refinement of the pose against observed landmarks.

    Damped normal equations (J^T J + lambda I) d = -J^T r are solved per
    step; lambda shrinks by 10 on accepted (strictly error-decreasing)
    steps and grows by 10 on rejections. Terminates when the gradient norm
    drops below gradient_tol, an accepted step improves the error by less
    than error_change_tol, or max_iterations is reached. Raises DivergedPose
    when lambda exceeds lambda_max without an acceptable step, and
    BehindCamera when the initial pose puts a model point behind the camera.
    """
    obs = landmarks.as_array()
    pts = model.as_array()
    n = pts.shape[0]

    pose = initial
    r = _residual(pose, pts, obs, k)
    if r is None:
        raise BehindCamera("initial pose places a model point behind the camera")
    err = float(r @ r)
    accepted = [err]

    lam = lambda0
    iterations = 0
    converged = False
    grad_ok = False
    for _ in range(max_iterations):
        jac = projection_jacobian(pose, pts, k)
        grad = 2.0 * (jac.T @ r)
        if np.linalg.norm(grad) < gradient_tol:
            converged = True
            grad_ok = True
            break

        jtj = jac.T @ jac
        jtr = jac.T @ r
        improvement = None
        while True:
            try:
                delta = np.linalg.solve(jtj + lam * np.eye(6), -jtr)
            except np.linalg.LinAlgError:
                delta = None
            cand = _apply_step(pose, delta) if delta is not None else None
            cand_r = _residual(cand, pts, obs, k) if cand is not None else None
            cand_err = float(cand_r @ cand_r) if cand_r is not None else math.inf
            if cand_err < err:
                improvement = err - cand_err
                pose, r, err = cand, cand_r, cand_err
                accepted.append(err)
                lam = max(lam / 10.0, 1e-15)
                break
            lam *= 10.0
            if lam > lambda_max:
                raise DivergedPose(f"damping exceeded {lambda_max:g} without an accepted step")
        iterations += 1

        if improvement < error_change_tol:
            converged = True
            break

    rms = math.sqrt(err / n)
    yaw, pitch, roll = euler_from_rotation(pose.rotation)
    return HeadPoseEstimate(
        pose=pose,
        yaw=yaw,
        pitch=pitch,
        roll=roll,
        rms_error=rms,
        iterations=iterations,
        converged=converged and (grad_ok or rms <= converged_rms),
        accepted_errors=tuple(accepted),
    )


def estimate_head_pose(
    landmarks: LandmarkSet2D, model: FaceModel, k: CameraIntrinsics, **lm_options
) -> HeadPoseEstimate:
    """DLT initialization followed by LM refinement."""
    return refine_lm(solve_dlt(landmarks, model, k), landmarks, model, k, **lm_options)


def eye_aspect_ratio(eye: EyeLandmarks) -> float:
    """(|p2-p6| + |p3-p5|) / (2 |p1-p4|); near zero for a closed eye.

    Raises DegenerateEye when the horizontal corners coincide.
    """
    p = [np.asarray(pt, dtype=float) for pt in eye.points]
    width = np.linalg.norm(p[0] - p[3])
    if width <= 1e-6:
        raise DegenerateEye("eye corner landmarks coincide")
    return float((np.linalg.norm(p[1] - p[5]) + np.linalg.norm(p[2] - p[4])) / (2.0 * width))


def classify_attention_direction(
    est: HeadPoseEstimate,
    ear_left: float,
    ear_right: float,
    *,
    yaw_threshold: float = math.radians(30.0),
    pitch_threshold: float = math.radians(20.0),
    ear_threshold: float = 0.2,
) -> str:
    """Attention label from a converged pose estimate and per-eye openness."""
    facing = abs(est.yaw) <= yaw_threshold and abs(est.pitch) <= pitch_threshold
    if not facing:
        return "facing_away"
    eyes_open = 0.5 * (ear_left + ear_right) >= ear_threshold
    return "facing_robot_eyes_open" if eyes_open else "facing_robot_eyes_closed"
