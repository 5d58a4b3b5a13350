"""Plain-text key-value configuration with module-prefixed keys.

Every tunable default of the pipeline lives here so that it can be
overridden from a config file (``key = value``, ``#`` comments) or the
COACH_CONFIG environment variable. Values are stored as strings and
typed at access time by the builder helpers.
"""

from __future__ import annotations

import math
import os

from .errors import ConfigError
from .exercise import ExerciseSpec, RegionOfInterest
from .geometry import CameraIntrinsics, JointId, Vec3
from .headpose import FACE_POINT_NAMES, FaceModel
from .retarget import RobotArmModel
from .session import FeedbackPolicy, SessionConfig

DEFAULT_TEXTS = {
    "intro": "Welcome. Regular exercise keeps your strength and balance up, "
             "helps your heart, and can lift your mood. Let's do some together.",
    "goal": "Next exercise: {exercise}. We will do {target} repetitions. "
            "Watch me show you how.",
    "display_goal": "{exercise}: 0/{target}",
    "trigger": "Now it is your turn. Begin when you are ready.",
    "rep_feedback": "Good, that was repetition {count} of {target}.",
    "corrective.path_too_short": "Try a bigger movement, all the way up and back down.",
    "corrective.path_too_long": "Keep the movement a little smaller and steadier.",
    "corrective.path_not_smooth": "Try to move smoothly, without sudden changes.",
    "corrective.insufficient_excursion": "Lift a little higher this time.",
    "restore_query": "Hello! What were you doing? Shall we keep exercising?",
    "paused": "Okay, we will take a break. Say start when you want to continue.",
    "resume": "Great, let's continue where we left off.",
    "emergency": "I heard you. Stopping now and calling for help.",
    "farewell": "Well done, that is the whole session. Thank you for exercising with me.",
}

DEFAULTS: dict[str, str] = {
    # Camera model used for landmark projection and pose recovery.
    "camera.fx": "800.0",
    "camera.fy": "800.0",
    "camera.cx": "320.0",
    "camera.cy": "240.0",
    # Exercise limits. Empirical defaults; re-calibrated against the
    # synthetic generator, not taken from any sensor.
    "exercise.shoulder_press.tracked_joint": "left_wrist",
    "exercise.shoulder_press.roi_anchor": "left_shoulder",
    "exercise.shoulder_press.roi_offset": "0.05,0.20,0.0",
    "exercise.shoulder_press.roi_extents": "0.40,0.50,0.30",
    "exercise.shoulder_press.min_path_length": "0.6",
    "exercise.shoulder_press.max_path_length": "2.0",
    "exercise.shoulder_press.max_segment_angle": "2.6",
    "exercise.shoulder_press.min_excursion": "0.30",
    "exercise.shoulder_press.excursion_axis": "0,1,0",
    "exercise.shoulder_press.excursion_zero": "0.0",
    "exercise.side_lateral_raise.tracked_joint": "left_wrist",
    "exercise.side_lateral_raise.roi_anchor": "left_shoulder",
    "exercise.side_lateral_raise.roi_offset": "0.25,-0.20,0.0",
    "exercise.side_lateral_raise.roi_extents": "0.40,0.45,0.30",
    "exercise.side_lateral_raise.min_path_length": "0.5",
    "exercise.side_lateral_raise.max_path_length": "1.8",
    "exercise.side_lateral_raise.max_segment_angle": "2.6",
    "exercise.side_lateral_raise.min_excursion": "0.30",
    "exercise.side_lateral_raise.excursion_axis": "1,0,0",
    "exercise.side_lateral_raise.excursion_zero": "0.12",
    "exercise.min_sample_distance": "0.05",
    "exercise.min_confidence": "0.3",
    # Generic face model, nose-tip origin, meters. Plumbing constants
    # validated through the synthetic round-trip oracle only.
    "head_pose.model.nose_tip": "0.0,0.0,0.0",
    "head_pose.model.chin": "0.0,-0.110,-0.020",
    "head_pose.model.left_eye_outer": "-0.0450,0.0520,-0.030",
    "head_pose.model.right_eye_outer": "0.0450,0.0520,-0.030",
    "head_pose.model.left_mouth": "-0.0300,-0.0450,-0.025",
    "head_pose.model.right_mouth": "0.0300,-0.0450,-0.025",
    "head_pose.yaw_threshold_deg": "30.0",
    "head_pose.pitch_threshold_deg": "20.0",
    "head_pose.ear_threshold": "0.2",
    "head_pose.lm.lambda0": "1e-3",
    "head_pose.lm.lambda_max": "1e8",
    "head_pose.lm.max_iterations": "100",
    "head_pose.lm.gradient_tol": "1e-8",
    "head_pose.lm.error_change_tol": "1e-10",
    "head_pose.lm.converged_rms_px": "5.0",
    "attention.timeout": "5.0",
    "attention.motion_speed_threshold": "0.05",
    "attention.motion_window": "0.5",
    "retarget.tiny_threshold": "0.02",
    "retarget.large_threshold": "1.0",
    "retarget.s0_limits": "-1.70,1.70",
    "retarget.s1_limits": "-2.15,1.05",
    "retarget.e0_limits": "-3.05,3.05",
    "retarget.e1_limits": "0.05,2.62",
    "retarget.upper_arm_length": "0.37",
    "retarget.forearm_length": "0.37",
    "session.exercises": "shoulder_press,side_lateral_raise",
    "session.repetitions": "5",
    "session.policy": "turn_based",
    "session.pause_timeout": "120.0",
}
DEFAULTS.update({f"session.text.{key}": value for key, value in DEFAULT_TEXTS.items()})

ENV_CONFIG_VAR = "COACH_CONFIG"


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config(path: str | None = None) -> dict[str, str]:
    """Defaults merged with an optional config file (or $COACH_CONFIG)."""
    cfg = dict(DEFAULTS)
    if path is None:
        path = os.environ.get(ENV_CONFIG_VAR) or None
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg.update(parse_config_text(text, source=path))
    return cfg


def _float(cfg: dict[str, str], key: str) -> float:
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {cfg[key]!r}") from exc


def _int(cfg: dict[str, str], key: str) -> int:
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {cfg[key]!r}") from exc


def _vec3(cfg: dict[str, str], key: str) -> Vec3:
    parts = cfg[key].split(",")
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 'x,y,z', got {cfg[key]!r}")
    try:
        return Vec3(float(parts[0]), float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _pair(cfg: dict[str, str], key: str) -> tuple[float, float]:
    parts = cfg[key].split(",")
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected 'min,max', got {cfg[key]!r}")
    return (float(parts[0]), float(parts[1]))


def _joint(cfg: dict[str, str], key: str) -> JointId:
    try:
        return JointId(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: unknown joint {cfg[key]!r}") from exc


def camera_intrinsics(cfg: dict[str, str]) -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=_float(cfg, "camera.fx"),
        fy=_float(cfg, "camera.fy"),
        cx=_float(cfg, "camera.cx"),
        cy=_float(cfg, "camera.cy"),
    )


def exercise_spec(cfg: dict[str, str], name: str, repetitions: int | None = None) -> ExerciseSpec:
    prefix = f"exercise.{name}"
    if f"{prefix}.min_path_length" not in cfg:
        raise ConfigError(f"no configuration for exercise {name!r}")
    axis = _vec3(cfg, f"{prefix}.excursion_axis")
    norm = axis.norm()
    if norm <= 0:
        raise ConfigError(f"{prefix}.excursion_axis must be non-zero")
    try:
        return ExerciseSpec(
            name=name,
            tracked_joint=_joint(cfg, f"{prefix}.tracked_joint"),
            roi=RegionOfInterest(
                anchor=_joint(cfg, f"{prefix}.roi_anchor"),
                offset=_vec3(cfg, f"{prefix}.roi_offset"),
                extents=_vec3(cfg, f"{prefix}.roi_extents"),
            ),
            min_path_length=_float(cfg, f"{prefix}.min_path_length"),
            max_path_length=_float(cfg, f"{prefix}.max_path_length"),
            max_segment_angle=_float(cfg, f"{prefix}.max_segment_angle"),
            min_excursion=_float(cfg, f"{prefix}.min_excursion"),
            excursion_axis=axis * (1.0 / norm),
            excursion_zero=_float(cfg, f"{prefix}.excursion_zero"),
            target_repetitions=repetitions or _int(cfg, "session.repetitions"),
            min_sample_distance=_float(cfg, "exercise.min_sample_distance"),
            min_confidence=_float(cfg, "exercise.min_confidence"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def face_model(cfg: dict[str, str]) -> FaceModel:
    return FaceModel(
        points={name: _vec3(cfg, f"head_pose.model.{name}") for name in FACE_POINT_NAMES}
    )


def attention_thresholds(cfg: dict[str, str]) -> dict[str, float]:
    return {
        "yaw_threshold": math.radians(_float(cfg, "head_pose.yaw_threshold_deg")),
        "pitch_threshold": math.radians(_float(cfg, "head_pose.pitch_threshold_deg")),
        "ear_threshold": _float(cfg, "head_pose.ear_threshold"),
    }


def lm_options(cfg: dict[str, str]) -> dict[str, float]:
    return {
        "max_iterations": _int(cfg, "head_pose.lm.max_iterations"),
        "gradient_tol": _float(cfg, "head_pose.lm.gradient_tol"),
        "error_change_tol": _float(cfg, "head_pose.lm.error_change_tol"),
        "lambda0": _float(cfg, "head_pose.lm.lambda0"),
        "lambda_max": _float(cfg, "head_pose.lm.lambda_max"),
        "converged_rms": _float(cfg, "head_pose.lm.converged_rms_px"),
    }


def robot_model(cfg: dict[str, str]) -> RobotArmModel:
    try:
        return RobotArmModel(
            s0_limits=_pair(cfg, "retarget.s0_limits"),
            s1_limits=_pair(cfg, "retarget.s1_limits"),
            e0_limits=_pair(cfg, "retarget.e0_limits"),
            e1_limits=_pair(cfg, "retarget.e1_limits"),
            upper_arm_length=_float(cfg, "retarget.upper_arm_length"),
            forearm_length=_float(cfg, "retarget.forearm_length"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def session_config(
    cfg: dict[str, str],
    policy: str | FeedbackPolicy | None = None,
    exercises: tuple[str, ...] | None = None,
) -> SessionConfig:
    if policy is None:
        policy = cfg["session.policy"]
    if isinstance(policy, str):
        try:
            policy = FeedbackPolicy(policy.replace("-", "_"))
        except ValueError as exc:
            raise ConfigError(f"unknown feedback policy {policy!r}") from exc
    if exercises is None:
        exercises = tuple(
            name.strip() for name in cfg["session.exercises"].split(",") if name.strip()
        )
    texts = {
        key.removeprefix("session.text."): value
        for key, value in cfg.items()
        if key.startswith("session.text.")
    }
    try:
        return SessionConfig(
            exercises=exercises,
            repetitions=_int(cfg, "session.repetitions"),
            policy=policy,
            pause_timeout=_float(cfg, "session.pause_timeout"),
            texts=texts,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
