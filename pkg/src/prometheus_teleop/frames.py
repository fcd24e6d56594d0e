"""Operator-to-robot frame mapping: rigid transforms, registration, clutching,
and workspace clamping.

Pure functions throughout; clutch transitions return new ClutchState values
and the control loop owns the current one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .geometry import (
    IDENTITY_QUAT,
    Pose,
    quat_conj,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
    matrix_to_quat,
)


class DegenerateGeometry(ValueError):
    """Calibration points are too few, coincident, or collinear."""


@dataclass(frozen=True)
class TrackerSample:
    """One tracked hand pose, operator frame. Timestamps are monotonic seconds."""

    timestamp: float
    pose: Pose

    def __post_init__(self):
        if not np.isfinite(self.timestamp):
            raise ValueError("tracker timestamp must be finite")


@dataclass(frozen=True)
class FrameTransform:
    """Rigid map from the operator frame to the robot base frame."""

    rotation: np.ndarray  # unit quaternion [w, x, y, z]
    translation: np.ndarray  # meters

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=float).reshape(4).copy()
        tr = np.asarray(self.translation, dtype=float).reshape(3).copy()
        n = np.linalg.norm(rot)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"rotation quaternion norm {n!r} is not 1")
        if not np.all(np.isfinite(tr)):
            raise ValueError("translation must be finite")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @staticmethod
    def identity() -> "FrameTransform":
        return FrameTransform(IDENTITY_QUAT, np.zeros(3))

    def compose(self, other: "FrameTransform") -> "FrameTransform":
        """self ∘ other: apply other first, then self."""
        return FrameTransform(
            quat_normalize(quat_mul(self.rotation, other.rotation)),
            quat_rotate(self.rotation, other.translation) + self.translation,
        )

    def inverse(self) -> "FrameTransform":
        qi = quat_conj(self.rotation)
        return FrameTransform(qi, -quat_rotate(qi, self.translation))


def apply_transform(t: FrameTransform, p: Pose) -> Pose:
    """Rigidly map a pose: position ← R·p + t, orientation ← R ⊗ q."""
    return Pose(
        quat_rotate(t.rotation, p.position) + t.translation,
        quat_normalize(quat_mul(t.rotation, p.orientation)),
    )


@dataclass(frozen=True)
class CalibrationResult:
    transform: FrameTransform
    residual_rms: float
    # Leftover orientation between mapped first operator pose and first robot
    # pose; diagnostic only (the rigid map itself comes from positions).
    orientation_offset: Optional[np.ndarray] = None


def _positions_of(pairs):
    ops, robs = [], []
    op_poses, rob_poses = [], []
    for op, rob in pairs:
        if isinstance(op, Pose):
            ops.append(op.position)
            op_poses.append(op)
        else:
            ops.append(np.asarray(op, dtype=float).reshape(3))
        if isinstance(rob, Pose):
            robs.append(rob.position)
            rob_poses.append(rob)
        else:
            robs.append(np.asarray(rob, dtype=float).reshape(3))
    return np.array(ops), np.array(robs), op_poses, rob_poses


def calibrate(pairs: Sequence[Tuple]) -> CalibrationResult:
    """Least-squares rigid registration of operator points onto robot points.

    Accepts (Pose, Pose) or (xyz, xyz) pairs; at least 3 non-collinear
    positions are required. Returns the transform minimizing Σ‖R·pᵢ + t − qᵢ‖²
    and the residual RMS.
    """
    A, B, op_poses, rob_poses = _positions_of(pairs)
    if len(A) < 3:
        raise DegenerateGeometry("need at least 3 calibration pairs")
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    Ac, Bc = A - ca, B - cb
    # Collinear or coincident points leave a rotation axis unconstrained.
    spread = np.linalg.svd(Ac, compute_uv=False)
    if spread[1] < 1e-9 * max(spread[0], 1e-12) or spread[0] < 1e-12:
        raise DegenerateGeometry("calibration points are collinear or coincident")
    H = Ac.T @ Bc
    U, _, Vt = np.linalg.svd(H)
    sign = np.sign(np.linalg.det(Vt.T @ U.T))
    R = Vt.T @ np.diag([1.0, 1.0, sign]) @ U.T
    t = cb - R @ ca
    resid = np.sqrt(np.mean(np.sum((A @ R.T + t - B) ** 2, axis=1)))
    transform = FrameTransform(matrix_to_quat(R), t)
    offset = None
    if op_poses and rob_poses:
        mapped = quat_mul(transform.rotation, op_poses[0].orientation)
        offset = quat_normalize(quat_mul(quat_conj(mapped), rob_poses[0].orientation))
    return CalibrationResult(transform, float(resid), offset)


def load_calibration_pairs(path):
    """Read 'op_x op_y op_z rob_x rob_y rob_z' rows from a plain-text file."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            vals = [float(p) for p in line.split()]
            if len(vals) != 6:
                raise ValueError(f"expected 6 numbers per row, got: {line!r}")
            pairs.append((np.array(vals[:3]), np.array(vals[3:])))
    return pairs


@dataclass(frozen=True)
class ClutchState:
    """Relative-teleop clutch: anchors exist exactly while engaged."""

    engaged: bool = False
    anchor_operator: Optional[Pose] = None
    anchor_robot: Optional[Pose] = None

    def __post_init__(self):
        have_anchors = self.anchor_operator is not None and self.anchor_robot is not None
        if self.engaged != have_anchors:
            raise ValueError("clutch anchors must be set exactly while engaged")


def engage(sample: TrackerSample, robot_pose: Pose, t: FrameTransform) -> ClutchState:
    """Engage the clutch, anchoring the current mapped hand pose to the robot."""
    return ClutchState(True, apply_transform(t, sample.pose), robot_pose)


def disengage() -> ClutchState:
    return ClutchState(False, None, None)


def clutch_step(
    state: ClutchState,
    sample: TrackerSample,
    robot_pose: Pose,
    t: FrameTransform,
):
    """One clutch update. Engaged: command = anchor_robot ∘ (anchor_op⁻¹ ∘ mapped).

    Disengaged: no command, anchors untouched. robot_pose is unused while
    engaged (anchoring happened at engage time) but kept for signature
    symmetry with engage().
    """
    if not state.engaged:
        return state, None
    mapped = apply_transform(t, sample.pose)
    relative = state.anchor_operator.inverse().compose(mapped)
    return state, state.anchor_robot.compose(relative)


def clamp_workspace(p: Pose, center, radius: float) -> Pose:
    """Project the position onto the ball of given radius; orientation unchanged."""
    if radius <= 0:
        raise ValueError("workspace radius must be positive")
    center = np.asarray(center, dtype=float).reshape(3)
    offset = p.position - center
    dist = np.linalg.norm(offset)
    # The relative tolerance keeps re-clamping a projected point a no-op
    # (projection can land one ulp outside the ball).
    if dist <= radius * (1.0 + 1e-12):
        return p
    return Pose(center + offset * (radius / dist), p.orientation)
