"""Quaternion and rigid-pose primitives shared across the package.

Quaternions are numpy arrays ordered [w, x, y, z] and kept unit-norm.
Positions are meters, angles radians, frames right-handed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_NORM_TOL = 1e-9

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite quaternion")
    return q / n


def quat_mul(q1, q2) -> np.ndarray:
    """Hamilton product q1 ⊗ q2."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conj(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    w = q[0]
    u = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    # Rodrigues form: v + 2w(u×v) + 2u×(u×v)
    uv = np.cross(u, v)
    return v + 2.0 * w * uv + 2.0 * np.cross(u, uv)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_quat(R) -> np.ndarray:
    """Rotation matrix to unit quaternion [w, x, y, z] (Shepperd's method)."""
    R = np.asarray(R, dtype=float)
    t = R[0, 0] + R[1, 1] + R[2, 2]
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([
            0.25 * s,
            (R[2, 1] - R[1, 2]) / s,
            (R[0, 2] - R[2, 0]) / s,
            (R[1, 0] - R[0, 1]) / s,
        ])
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([
            (R[2, 1] - R[1, 2]) / s,
            0.25 * s,
            (R[0, 1] + R[1, 0]) / s,
            (R[0, 2] + R[2, 0]) / s,
        ])
    elif R[1, 1] > R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([
            (R[0, 2] - R[2, 0]) / s,
            (R[0, 1] + R[1, 0]) / s,
            0.25 * s,
            (R[1, 2] + R[2, 1]) / s,
        ])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([
            (R[1, 0] - R[0, 1]) / s,
            (R[0, 2] + R[2, 0]) / s,
            (R[1, 2] + R[2, 1]) / s,
            0.25 * s,
        ])
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Intrinsic x-y-z (roll, pitch, yaw) to quaternion."""
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def quat_angle(q1, q2) -> float:
    """Angular distance between two unit quaternions, radians in [0, π]."""
    qe = quat_mul(quat_conj(q1), q2)
    return 2.0 * np.arctan2(np.linalg.norm(qe[1:]), abs(qe[0]))


def rotation_angle_between(R1, R2) -> float:
    """Rotation angle of R1ᵀ·R2, accurate near 0 and π (atan2 form)."""
    Re = np.asarray(R1).T @ np.asarray(R2)
    v = np.array([Re[2, 1] - Re[1, 2], Re[0, 2] - Re[2, 0], Re[1, 0] - Re[0, 1]])
    s = np.linalg.norm(v) / 2.0
    c = (np.trace(Re) - 1.0) / 2.0
    return float(np.arctan2(s, c))


@dataclass(frozen=True)
class Pose:
    """Rigid pose: position (meters) and unit-quaternion orientation [w,x,y,z]."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3).copy()
        ori = np.asarray(self.orientation, dtype=float).reshape(4).copy()
        if not np.all(np.isfinite(pos)):
            raise ValueError("pose position must be finite")
        n = np.linalg.norm(ori)
        if abs(n - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"orientation quaternion norm {n!r} is not 1")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", ori)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), IDENTITY_QUAT)

    @staticmethod
    def from_matrix(T) -> "Pose":
        T = np.asarray(T, dtype=float)
        return Pose(T[:3, 3], matrix_to_quat(T[:3, :3]))

    def to_matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = quat_to_matrix(self.orientation)
        T[:3, 3] = self.position
        return T

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply other in this pose's frame."""
        return Pose(
            self.position + quat_rotate(self.orientation, other.position),
            quat_normalize(quat_mul(self.orientation, other.orientation)),
        )

    def inverse(self) -> "Pose":
        qi = quat_conj(self.orientation)
        return Pose(-quat_rotate(qi, self.position), qi)

    def translated(self, offset) -> "Pose":
        return Pose(self.position + np.asarray(offset, dtype=float), self.orientation)

    def position_distance(self, other: "Pose") -> float:
        return float(np.linalg.norm(self.position - other.position))

    def orientation_distance(self, other: "Pose") -> float:
        return quat_angle(self.orientation, other.orientation)

    def as_vector(self) -> np.ndarray:
        """Flat [x, y, z, qw, qx, qy, qz] — the wire layout used in telemetry."""
        return np.concatenate([self.position, self.orientation])

    @staticmethod
    def from_vector(v) -> "Pose":
        # No renormalization: as_vector → from_vector must be lossless.
        v = np.asarray(v, dtype=float).reshape(7)
        return Pose(v[:3], v[3:])
