"""Trajectory recording, standardization, discretization, and the on-disk
container.

Files are newline-delimited JSON: one header record, one record per 10 Hz
step, and a final end record carrying the step count (so truncation is
detectable). Floats survive the round trip exactly; image slots hold
relative path references, never pixels.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .geometry import Pose
from .gripper_sim import GraspOutcome, ObjectModel

SCHEMA_VERSION = "prometheus-ds/1"

# Per-step action scales: 0.05 rad per joint, 5 mm of gripper travel.
DEFAULT_A_MAX = np.array([0.05] * 6 + [5.0])

BINS = 256


class NonPositiveScale(ValueError):
    pass


class TooShort(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class SchemaVersionMismatch(ValueError):
    pass


class CorruptRecord(ValueError):
    pass


def standardize_action(raw, a_max) -> np.ndarray:
    """Clamp(raw / a_max, -1, 1) component-wise."""
    raw = np.asarray(raw, dtype=float).reshape(7)
    a_max = np.asarray(a_max, dtype=float).reshape(7)
    if np.any(a_max <= 0):
        raise NonPositiveScale("all action scales must be positive")
    return np.clip(raw / a_max, -1.0, 1.0)


def destandardize_action(action, a_max) -> np.ndarray:
    action = np.asarray(action, dtype=float).reshape(7)
    a_max = np.asarray(a_max, dtype=float).reshape(7)
    if np.any(a_max <= 0):
        raise NonPositiveScale("all action scales must be positive")
    return action * a_max


def is_clamped(raw, a_max) -> bool:
    raw = np.asarray(raw, dtype=float).reshape(7)
    a_max = np.asarray(a_max, dtype=float).reshape(7)
    return bool(np.any(np.abs(raw) > a_max))


def discretize(v: float) -> int:
    """Uniform 256-bin index for v ∈ [0, 1]; v = 1.0 top-clamps to bin 255."""
    if not 0.0 <= v <= 1.0:
        raise OutOfRange(f"value {v!r} outside [0, 1]")
    return min(int(math.floor(v * BINS)), BINS - 1)


def compute_deltas(states) -> np.ndarray:
    """Per-step raw deltas of consecutive (6 joints + opening) states.

    The final state has no action, so n states yield n-1 rows.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != 7:
        raise ValueError("states must be (n, 7): six joints plus gripper opening")
    if states.shape[0] < 2:
        raise TooShort("need at least 2 states to form deltas")
    return states[1:] - states[:-1]


@dataclass(frozen=True)
class Observation:
    """One recorded proprioceptive state. Normalized fields live in [0, 1];
    opening_mm is kept alongside so replay can reproduce forces bit-exactly."""

    joints: np.ndarray
    ee_pose: Pose
    gripper_pos_norm: float
    force_norm: float
    opening_mm: float
    wrist_image_ref: Optional[str] = None
    side_image_ref: Optional[str] = None

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=float).reshape(6).copy()
        object.__setattr__(self, "joints", joints)
        for name in ("gripper_pos_norm", "force_norm"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v!r} outside [0, 1]")

    def raw_state(self) -> np.ndarray:
        return np.concatenate([self.joints, [self.opening_mm]])


@dataclass(frozen=True)
class Action:
    """Standardized 7-dim delta (6 joints + gripper), each in [-1, 1]."""

    values: np.ndarray
    clamped: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(7).copy()
        if np.any(v < -1.0) or np.any(v > 1.0):
            raise ValueError("action components must lie in [-1, 1]")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class TrajectoryStep:
    observation: Observation
    action: Optional[Action]  # None on the terminal step


@dataclass
class Trajectory:
    episode_id: str
    task: str
    steps: List[TrajectoryStep]
    a_max: np.ndarray
    control_hz: float = 100.0
    record_hz: float = 10.0
    outcome: Optional[GraspOutcome] = None
    object_params: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.a_max = np.asarray(self.a_max, dtype=float).reshape(7).copy()

    def raw_states(self) -> np.ndarray:
        return np.stack([s.observation.raw_state() for s in self.steps])

    def reconstruct_states(self) -> np.ndarray:
        """Replay destandardized actions from the initial state."""
        states = [self.steps[0].observation.raw_state()]
        for step in self.steps[:-1]:
            delta = destandardize_action(step.action.values, self.a_max)
            states.append(states[-1] + delta)
        return np.stack(states)


class TrajectoryRecorder:
    """Accumulates recording-tick observations and assembles the trajectory.

    Actions are the standardized deltas between consecutive recorded states;
    deltas beyond a_max are clamped and flagged at record time.
    """

    def __init__(self, episode_id: str, task: str, a_max=None, control_hz=100.0,
                 record_hz=10.0, object_params=None):
        self.episode_id = episode_id
        self.task = task
        self.a_max = DEFAULT_A_MAX.copy() if a_max is None else np.asarray(
            a_max, dtype=float
        ).reshape(7)
        self.control_hz = control_hz
        self.record_hz = record_hz
        self.object_params = object_params
        self.observations: List[Observation] = []

    def append(self, obs: Observation):
        self.observations.append(obs)

    def build(self, outcome: Optional[GraspOutcome] = None) -> Trajectory:
        if not self.observations:
            raise TooShort("no observations recorded")
        steps = []
        raw = np.stack([o.raw_state() for o in self.observations])
        deltas = raw[1:] - raw[:-1] if len(raw) > 1 else np.zeros((0, 7))
        for i, obs in enumerate(self.observations):
            if i < len(deltas):
                action = Action(
                    standardize_action(deltas[i], self.a_max),
                    clamped=is_clamped(deltas[i], self.a_max),
                )
            else:
                action = None
            steps.append(TrajectoryStep(obs, action))
        return Trajectory(
            episode_id=self.episode_id,
            task=self.task,
            steps=steps,
            a_max=self.a_max,
            control_hz=self.control_hz,
            record_hz=self.record_hz,
            outcome=outcome,
            object_params=self.object_params,
        )


def _object_params_to_json(params):
    if params is None:
        return None
    out = dict(params)
    dt = out.get("damage_threshold")
    if dt is not None and math.isinf(dt):
        out["damage_threshold"] = None
    return out


def _object_params_from_json(params):
    if params is None:
        return None
    out = dict(params)
    if out.get("damage_threshold") is None and "damage_threshold" in out:
        out["damage_threshold"] = math.inf
    return out


def object_params_dict(obj: ObjectModel) -> dict:
    return {
        "name": obj.name,
        "free_size": obj.free_size,
        "stiffness": obj.stiffness,
        "damage_threshold": obj.damage_threshold,
        "mass": obj.mass,
        "friction_mu": obj.friction_mu,
    }


def _obs_to_json(obs: Observation) -> dict:
    return {
        "joints": obs.joints.tolist(),
        "ee_pose": obs.ee_pose.as_vector().tolist(),
        "gripper_pos_norm": obs.gripper_pos_norm,
        "force_norm": obs.force_norm,
        "opening_mm": obs.opening_mm,
        "wrist_image_ref": obs.wrist_image_ref,
        "side_image_ref": obs.side_image_ref,
    }


def _obs_from_json(d: dict) -> Observation:
    return Observation(
        joints=np.array(d["joints"], dtype=float),
        ee_pose=Pose.from_vector(d["ee_pose"]),
        gripper_pos_norm=d["gripper_pos_norm"],
        force_norm=d["force_norm"],
        opening_mm=d["opening_mm"],
        wrist_image_ref=d["wrist_image_ref"],
        side_image_ref=d["side_image_ref"],
    )


def export_trajectory(traj: Trajectory, path) -> None:
    """Write the self-describing newline-delimited container."""
    header = {
        "schema": SCHEMA_VERSION,
        "episode_id": traj.episode_id,
        "task": traj.task,
        "a_max": traj.a_max.tolist(),
        "control_hz": traj.control_hz,
        "record_hz": traj.record_hz,
        "object": _object_params_to_json(traj.object_params),
        "outcome": None
        if traj.outcome is None
        else {
            "label": traj.outcome.label,
            "peak_force": traj.outcome.peak_force,
            "at_step": traj.outcome.at_step,
        },
        "meta": traj.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for step in traj.steps:
            rec = {"type": "step", "obs": _obs_to_json(step.observation)}
            if step.action is None:
                rec["action"] = None
            else:
                rec["action"] = step.action.values.tolist()
                rec["clamped"] = step.action.clamped
            fh.write(json.dumps(rec) + "\n")
        fh.write(json.dumps({"type": "end", "steps": len(traj.steps)}) + "\n")


def import_trajectory(path) -> Trajectory:
    """Load a container written by export_trajectory; lossless inverse."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CorruptRecord("empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorruptRecord(f"unreadable header: {exc}") from exc
    schema = header.get("schema")
    if schema != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"expected {SCHEMA_VERSION!r}, got {schema!r}")
    steps: List[TrajectoryStep] = []
    end_count = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptRecord(f"line {lineno}: {exc}") from exc
        kind = rec.get("type")
        if kind == "step":
            if end_count is not None:
                raise CorruptRecord("step record after end record")
            try:
                obs = _obs_from_json(rec["obs"])
                action = None
                if rec.get("action") is not None:
                    action = Action(
                        np.array(rec["action"], dtype=float),
                        clamped=bool(rec.get("clamped", False)),
                    )
            except (KeyError, TypeError, ValueError) as exc:
                raise CorruptRecord(f"line {lineno}: {exc}") from exc
            steps.append(TrajectoryStep(obs, action))
        elif kind == "end":
            end_count = rec.get("steps")
        else:
            raise CorruptRecord(f"line {lineno}: unknown record type {kind!r}")
    if end_count is None:
        raise CorruptRecord("missing end record (truncated file?)")
    if end_count != len(steps):
        raise CorruptRecord(f"end record says {end_count} steps, file has {len(steps)}")
    outcome = None
    if header.get("outcome") is not None:
        o = header["outcome"]
        outcome = GraspOutcome(o["label"], o["peak_force"], o["at_step"])
    return Trajectory(
        episode_id=header["episode_id"],
        task=header["task"],
        steps=steps,
        a_max=np.array(header["a_max"], dtype=float),
        control_hz=header["control_hz"],
        record_hz=header["record_hz"],
        outcome=outcome,
        object_params=_object_params_from_json(header.get("object")),
        meta=header.get("meta", {}),
    )


def trajectories_equal(a: Trajectory, b: Trajectory) -> bool:
    """Exact (bitwise on floats) equality of two trajectories."""
    if (
        a.episode_id != b.episode_id
        or a.task != b.task
        or not np.array_equal(a.a_max, b.a_max)
        or a.control_hz != b.control_hz
        or a.record_hz != b.record_hz
        or a.outcome != b.outcome
        or a.object_params != b.object_params
        or a.meta != b.meta
        or len(a.steps) != len(b.steps)
    ):
        return False
    for sa, sb in zip(a.steps, b.steps):
        oa, ob = sa.observation, sb.observation
        if not (
            np.array_equal(oa.joints, ob.joints)
            and np.array_equal(oa.ee_pose.as_vector(), ob.ee_pose.as_vector())
            and oa.gripper_pos_norm == ob.gripper_pos_norm
            and oa.force_norm == ob.force_norm
            and oa.opening_mm == ob.opening_mm
            and oa.wrist_image_ref == ob.wrist_image_ref
            and oa.side_image_ref == ob.side_image_ref
        ):
            return False
        if (sa.action is None) != (sb.action is None):
            return False
        if sa.action is not None and not (
            np.array_equal(sa.action.values, sb.action.values)
            and sa.action.clamped == sb.action.clamped
        ):
            return False
    return True
