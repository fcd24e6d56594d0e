"""Forward and analytic inverse kinematics for 6R arms with UR-style geometry.

Joint vectors are shape-(6,) float arrays of radians. Forward kinematics and
the Jacobian work for any 6R DH table; the closed-form inverse requires the
UR joint pattern (validated before solving). All functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import _kernels
from .geometry import Pose, rotation_angle_between

TWO_PI = 2.0 * np.pi

# Joint-space distance weights for solution selection: base joints move the
# whole arm, wrist joints only the tool.
DEFAULT_SELECTION_WEIGHTS = np.array([1.0, 1.0, 1.0, 0.5, 0.5, 0.5])

DEFAULT_JOINT_LIMITS = np.array([[-TWO_PI, TWO_PI]] * 6)

WRIST_SINGULARITY_CUTOFF = 1e-6

IK_POSITION_TOL = 1e-9
IK_ANGLE_TOL = 1e-9


class EmptyCandidateSet(ValueError):
    """select_solution was given no candidates."""


class UnsupportedGeometry(ValueError):
    """The DH table does not match the UR pattern required by the analytic IK."""


@dataclass(frozen=True)
class DHTable:
    """Standard DH parameters, one row per joint: a, d, alpha, theta_offset."""

    a: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    theta_offset: np.ndarray

    def __post_init__(self):
        for name in ("a", "d", "alpha", "theta_offset"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(-1).copy()
            if v.shape != (6,):
                raise ValueError(f"DH column {name} must have exactly 6 entries")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"DH column {name} contains non-finite entries")
            object.__setattr__(self, name, v)

    @staticmethod
    def from_rows(rows) -> "DHTable":
        arr = np.asarray(rows, dtype=float)
        if arr.shape != (6, 4):
            raise ValueError("expected 6 rows of (a, d, alpha, theta_offset)")
        return DHTable(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])

    @staticmethod
    def load(path) -> "DHTable":
        """Read a plain-text table: one 'a d alpha theta_offset' row per joint."""
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise ValueError(f"expected 4 numbers per row, got: {line!r}")
                rows.append([float(p) for p in parts])
        if len(rows) != 6:
            raise ValueError(f"expected 6 joint rows, got {len(rows)}")
        return DHTable.from_rows(rows)

    def is_ur_pattern(self, tol: float = 1e-12) -> bool:
        """True if the table matches the UR structure the analytic IK assumes."""
        half_pi = np.pi / 2
        alpha_ok = (
            abs(self.alpha[0] - half_pi) <= tol
            and abs(self.alpha[1]) <= tol
            and abs(self.alpha[2]) <= tol
            and abs(self.alpha[3] - half_pi) <= tol
            and abs(self.alpha[4] + half_pi) <= tol
            and abs(self.alpha[5]) <= tol
        )
        a_ok = all(abs(self.a[i]) <= tol for i in (0, 3, 4, 5)) and all(
            abs(self.a[i]) > tol for i in (1, 2)
        )
        d_ok = all(abs(self.d[i]) <= tol for i in (1, 2)) and all(
            abs(self.d[i]) > tol for i in (3, 5)
        )
        return bool(alpha_ok and a_ok and d_ok)

    def max_reach(self) -> float:
        """Loose upper bound on tool distance from the base."""
        return float(np.sum(np.abs(self.a)) + np.sum(np.abs(self.d)))


def default_dh_table() -> DHTable:
    """The packaged UR3-geometry table."""
    src = resources.files("prometheus_teleop").joinpath("data/ur3_dh.txt")
    rows = []
    for line in src.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(p) for p in line.split()])
    return DHTable.from_rows(rows)


def wrap_angle(x):
    """Wrap angles to (-π, π]."""
    return -((np.pi - np.asarray(x)) % TWO_PI - np.pi)


def validate_joints(q, limits=None) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(6)
    if not np.all(np.isfinite(q)):
        raise ValueError("joint vector contains non-finite values")
    if limits is not None:
        limits = np.asarray(limits, dtype=float).reshape(6, 2)
        if np.any(q < limits[:, 0]) or np.any(q > limits[:, 1]):
            raise ValueError("joint vector outside configured limits")
    return q


def fk_frames(q, dh: DHTable) -> np.ndarray:
    """Cumulative link frames (7,4,4): base identity through the tool frame."""
    q = validate_joints(q)
    return _kernels.fk_frames(q, dh.a, dh.d, dh.alpha, dh.theta_offset)


def fk_matrix(q, dh: DHTable) -> np.ndarray:
    return fk_frames(q, dh)[6]


def forward_kinematics(q, dh: DHTable) -> Pose:
    """Tool pose from composing the six DH frames in order."""
    return Pose.from_matrix(fk_matrix(q, dh))


def joint_origins(q, dh: DHTable) -> np.ndarray:
    """Positions of the base and each joint frame origin, (7,3). Used for drawing."""
    return fk_frames(q, dh)[:, :3, 3].copy()


@dataclass
class IKResult:
    """Discrete IK solution set plus a report of dropped singular branches."""

    solutions: list = field(default_factory=list)
    singular_dropped: int = 0

    def __iter__(self):
        return iter(self.solutions)

    def __len__(self):
        return len(self.solutions)

    def __getitem__(self, i):
        return self.solutions[i]

    def __bool__(self):
        return bool(self.solutions)


def _pose_gap(T_have, T_want):
    pos = float(np.linalg.norm(T_have[:3, 3] - T_want[:3, 3]))
    ang = rotation_angle_between(T_have[:3, :3], T_want[:3, :3])
    return pos, ang


def _polish(q, T_target, dh: DHTable, iters: int = 3):
    """Newton-refine a near-solution toward T_target. Returns improved q."""
    q = q.copy()
    for _ in range(iters):
        T = fk_matrix(q, dh)
        pos, ang = _pose_gap(T, T_target)
        if pos < 1e-12 and ang < 1e-12:
            break
        err = np.empty(6)
        err[:3] = T_target[:3, 3] - T[:3, 3]
        Re = T_target[:3, :3] @ T[:3, :3].T
        v = np.array([Re[2, 1] - Re[1, 2], Re[0, 2] - Re[2, 0], Re[1, 0] - Re[0, 1]])
        s = np.linalg.norm(v) / 2.0
        c = (np.trace(Re) - 1.0) / 2.0
        theta = np.arctan2(s, c)
        err[3:] = 0.0 if s < 1e-300 else v / (2.0 * s) * theta
        J = jacobian(q, dh)
        dq, *_ = np.linalg.lstsq(J, err, rcond=None)
        q = q + dq
    return wrap_angle(q)


def inverse_kinematics(
    target: Pose,
    dh: DHTable,
    joint_limits=None,
    position_tol: float = IK_POSITION_TOL,
    angle_tol: float = IK_ANGLE_TOL,
) -> IKResult:
    """All closed-form joint solutions reaching the target pose.

    Unreachable targets yield an empty result (not an error). Wrist-singular
    branches (|sin q5| < 1e-6) are dropped and counted in the result. Every
    returned solution re-verifies under forward kinematics within the given
    tolerances; candidates that fail even after a short Newton polish are
    discarded.
    """
    if not dh.is_ur_pattern():
        raise UnsupportedGeometry(
            "analytic IK requires the UR joint pattern "
            "(a=[0,a2,a3,0,0,0], d=[d1,0,0,d4,d5,d6], alpha=[π/2,0,0,π/2,-π/2,0])"
        )
    limits = DEFAULT_JOINT_LIMITS if joint_limits is None else np.asarray(
        joint_limits, dtype=float
    ).reshape(6, 2)

    T06 = target.to_matrix()
    raw, n_singular = _kernels.ik_candidates(
        T06, dh.d[0], dh.a[1], dh.a[2], dh.d[3], dh.d[4], dh.d[5]
    )
    result = IKResult(singular_dropped=n_singular)
    for theta in raw:
        q = wrap_angle(theta - dh.theta_offset)
        pos, ang = _pose_gap(fk_matrix(q, dh), T06)
        if pos >= position_tol or ang >= angle_tol:
            q = _polish(q, T06, dh)
            pos, ang = _pose_gap(fk_matrix(q, dh), T06)
            if pos >= position_tol or ang >= angle_tol:
                continue
        if np.any(q < limits[:, 0]) or np.any(q > limits[:, 1]):
            continue
        if any(np.max(np.abs(wrap_angle(q - s))) < 1e-8 for s in result.solutions):
            continue
        result.solutions.append(q)
    return result


def select_solution(candidates, current, weights=None) -> np.ndarray:
    """Candidate minimizing weighted joint-space distance Σ wᵢ·|Δqᵢ| to current.

    Ties break toward the lowest candidate index.
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyCandidateSet("no IK candidates to select from")
    w = DEFAULT_SELECTION_WEIGHTS if weights is None else np.asarray(weights, dtype=float)
    current = np.asarray(current, dtype=float).reshape(6)
    best = None
    best_dist = np.inf
    for cand in candidates:
        dist = float(np.sum(w * np.abs(np.asarray(cand) - current)))
        if dist < best_dist:
            best, best_dist = cand, dist
    return np.asarray(best, dtype=float)


def jacobian(q, dh: DHTable) -> np.ndarray:
    """Geometric Jacobian in the base frame: rows 0-2 linear, 3-5 angular."""
    frames = fk_frames(q, dh)
    p_tool = frames[6, :3, 3]
    J = np.empty((6, 6))
    for i in range(6):
        z = frames[i, :3, 2]
        p = frames[i, :3, 3]
        J[:3, i] = np.cross(z, p_tool - p)
        J[3:, i] = z
    return J
