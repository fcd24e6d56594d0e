"""Simulator-backed force-feedback teleoperation middleware.

Tracker pose in, inverse kinematics, simulated gripper/object contact,
force-sensor linearization, haptic torque out — plus a 10 Hz imitation-
learning dataset recorder with standardized observations and delta actions.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .geometry import Pose
from .kinematics import (
    DHTable,
    default_dh_table,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    select_solution,
)
from .frames import FrameTransform, TrackerSample, apply_transform, calibrate, clamp_workspace
from .haptics import (
    ForceSample,
    FsrModel,
    HapticsParams,
    LinearizerConfig,
    TorqueCommand,
    feedback_torque,
    force_to_resistance,
    linearize,
    normalize_force,
    select_gain_resistor,
)
from .gripper_sim import (
    GraspOutcome,
    GripperState,
    ObjectModel,
    PadMechanism,
    classify_outcome,
    contact_step,
    pad_transfer,
    scripted_policy,
)
from .teleop_server import (
    OperatorCommand,
    RigParams,
    ServerConfig,
    SessionState,
    TickReport,
    run_episode,
    serve,
    tick,
)
from .dataset import (
    Action,
    Observation,
    Trajectory,
    TrajectoryRecorder,
    compute_deltas,
    destandardize_action,
    discretize,
    export_trajectory,
    import_trajectory,
    standardize_action,
)

__version__ = "0.1.0"
