"""robocoach: trace-driven engine for a robot exercise coach.

Consumes timestamp-sorted 3D skeleton and facial-landmark traces to count
exercise repetitions, estimate head pose and attention, detect
interruptions, retarget human arm motion onto a two-arm robot model, and
drive a coaching session under three feedback policies.
"""

from .attention import AttentionMonitor, InterruptionEvent, SpeechEvent
from .errors import CoachError
from .exercise import ExerciseEngine, ExerciseSpec, RegionOfInterest, RepEvent
from .geometry import CameraIntrinsics, JointId, RigidPose, SkeletonFrame, Vec3
from .headpose import (
    EyeLandmarks,
    FaceModel,
    HeadPoseEstimate,
    LandmarkSet2D,
    classify_attention_direction,
    estimate_head_pose,
    eye_aspect_ratio,
    refine_lm,
    solve_dlt,
)
from .retarget import (
    ArmObservation,
    RobotArmModel,
    RobotJointAngles,
    apply_motion_thresholds,
    compute_joint_angles,
    compute_normals,
    retarget,
    scale_to_robot,
)
from .session import (
    AttentionRestored,
    BehaviorCommand,
    FeedbackPolicy,
    Phase,
    SessionConfig,
    SessionController,
    Tick,
)
from .traceio import GeneratorParams, generate_trace, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "AttentionMonitor",
    "AttentionRestored",
    "ArmObservation",
    "BehaviorCommand",
    "CameraIntrinsics",
    "CoachError",
    "ExerciseEngine",
    "ExerciseSpec",
    "EyeLandmarks",
    "FaceModel",
    "FeedbackPolicy",
    "GeneratorParams",
    "HeadPoseEstimate",
    "InterruptionEvent",
    "JointId",
    "LandmarkSet2D",
    "Phase",
    "RegionOfInterest",
    "RepEvent",
    "RigidPose",
    "RobotArmModel",
    "RobotJointAngles",
    "SessionConfig",
    "SessionController",
    "SkeletonFrame",
    "SpeechEvent",
    "Tick",
    "Vec3",
    "apply_motion_thresholds",
    "classify_attention_direction",
    "compute_joint_angles",
    "compute_normals",
    "estimate_head_pose",
    "eye_aspect_ratio",
    "generate_trace",
    "read_trace",
    "refine_lm",
    "retarget",
    "scale_to_robot",
    "solve_dlt",
    "write_trace",
]
