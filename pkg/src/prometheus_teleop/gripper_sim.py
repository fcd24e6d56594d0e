"""Force-sensitive finger and parallel-gripper contact simulation.

The finger is a spring-loaded pad riding over a central sensor rod: contact
anywhere along the pad transfers to the rod, so the sensor force is
independent of contact position by design. Object contact is quasi-static
Hooke compression; grasp episodes classify as success, slip, or damage.

Object presets are illustrative stand-ins with configurable parameters.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from typing import Dict, Sequence, Tuple

GRAVITY = 9.81  # m/s²

DEFAULT_STROKE_MM = 85.0
DEFAULT_MAX_SPEED_MM_S = 150.0


class OutOfPadRange(ValueError):
    """Contact position outside [0, pad_length]."""


class EmptyTrace(ValueError):
    pass


@dataclass(frozen=True)
class PadMechanism:
    """Spring-loaded pad over the sensor rod.

    spring_k is N/mm per spring; the springs hold the pad off the sensor at
    rest, so readings start once the applied force exceeds the preload.
    """

    spring_k: float = 0.25
    spring_count: int = 2
    preload_f: float = 0.5
    pad_length: float = 90.0  # mm

    def __post_init__(self):
        if self.spring_k <= 0 or self.spring_count <= 0 or self.pad_length <= 0:
            raise ValueError("pad mechanism dimensions must be positive")
        if self.preload_f < 0:
            raise ValueError("preload cannot be negative")

    def deflection_mm(self, sensor_force: float) -> float:
        """Pad travel under a given transferred force."""
        return sensor_force / (self.spring_k * self.spring_count)


def pad_transfer(applied_f: float, contact_pos: float, mech: PadMechanism) -> float:
    """Force seen by the sensor rod for a contact anywhere along the pad.

    Uniform transfer across the pad surface is the mechanism's design goal:
    the output depends only on the applied force (minus spring preload),
    never on where along the pad the object touches.
    """
    if applied_f < 0:
        raise ValueError("applied force must be non-negative")
    if not 0.0 <= contact_pos <= mech.pad_length:
        raise OutOfPadRange(
            f"contact at {contact_pos!r} mm outside pad [0, {mech.pad_length!r}]"
        )
    return max(0.0, applied_f - mech.preload_f)


@dataclass(frozen=True)
class ObjectModel:
    """Graspable object: undeformed width (mm), contact stiffness (N/mm),
    damage threshold (N, inf when not fragile), mass (kg), friction."""

    name: str
    free_size: float
    stiffness: float
    damage_threshold: float
    mass: float
    friction_mu: float

    def __post_init__(self):
        if self.free_size <= 0 or self.stiffness <= 0 or self.mass <= 0:
            raise ValueError("free_size, stiffness and mass must be positive")
        if not 0.0 < self.friction_mu <= 2.0:
            raise ValueError("friction_mu must be in (0, 2]")
        if self.damage_threshold <= 0:
            raise ValueError("damage_threshold must be positive (inf allowed)")

    @property
    def min_holding_force(self) -> float:
        """Force per finger needed to hold the object against gravity (two-finger grasp)."""
        return self.mass * GRAVITY / (2.0 * self.friction_mu)


DEFAULT_OBJECTS: Dict[str, ObjectModel] = {
    "tomato": ObjectModel("tomato", 60.0, 0.8, 8.0, 0.12, 0.6),
    "shampoo": ObjectModel("shampoo", 55.0, 20.0, math.inf, 0.45, 0.5),
    "toothpaste": ObjectModel("toothpaste", 35.0, 0.3, math.inf, 0.08, 0.6),
    # Shell cracks well below what the pad can exert; treated as fragile.
    "egg": ObjectModel("egg", 45.0, 15.0, 6.0, 0.06, 0.4),
}


def load_object_presets(path) -> Dict[str, ObjectModel]:
    """Read object presets from an INI-style file, one section per object."""
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    objects = {}
    for name in parser.sections():
        sec = parser[name]
        objects[name] = ObjectModel(
            name=name,
            free_size=sec.getfloat("free_size"),
            stiffness=sec.getfloat("stiffness"),
            damage_threshold=sec.getfloat("damage_threshold", math.inf),
            mass=sec.getfloat("mass"),
            friction_mu=sec.getfloat("friction_mu"),
        )
    return objects


@dataclass(frozen=True)
class GripperState:
    """Parallel gripper: current and commanded opening (mm), stroke, last
    object-side contact force (N)."""

    opening: float = DEFAULT_STROKE_MM
    commanded_opening: float = DEFAULT_STROKE_MM
    stroke: float = DEFAULT_STROKE_MM
    contact_force: float = 0.0

    def __post_init__(self):
        if self.stroke <= 0:
            raise ValueError("stroke must be positive")
        if not 0.0 <= self.opening <= self.stroke:
            raise ValueError(f"opening {self.opening!r} outside [0, {self.stroke!r}]")
        if self.contact_force < 0:
            raise ValueError("contact force cannot be negative")

    @property
    def position_norm(self) -> float:
        return self.opening / self.stroke


def step_opening(
    g: GripperState, dt: float, max_speed: float = DEFAULT_MAX_SPEED_MM_S
) -> GripperState:
    """Move the opening toward the commanded opening at the gripper's max speed.

    The opening never leaves [0, stroke] regardless of the command.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = min(max(g.commanded_opening, 0.0), g.stroke)
    step = max_speed * dt
    delta = target - g.opening
    if abs(delta) <= step:
        opening = target
    else:
        opening = g.opening + math.copysign(step, delta)
    return replace(g, opening=opening, contact_force=0.0)


def contact_step(
    g: GripperState,
    obj: ObjectModel,
    dt: float,
    max_speed: float = DEFAULT_MAX_SPEED_MM_S,
    mech: PadMechanism = PadMechanism(),
) -> Tuple[GripperState, float]:
    """Advance the gripper one step and return (state, sensor force in N).

    Below the object's undeformed width the contact force follows Hooke's
    law; the sensor sees it through the pad transfer. The new state stores
    the object-side force, the return value is the sensor-side force.
    """
    moved = step_opening(g, dt, max_speed)
    if moved.opening < obj.free_size:
        force = obj.stiffness * (obj.free_size - moved.opening)
    else:
        force = 0.0
    sensor = pad_transfer(force, mech.pad_length / 2.0, mech)
    return replace(moved, contact_force=force), sensor


@dataclass(frozen=True)
class GraspOutcome:
    """Episode label with the peak object-side force and the step it keyed on."""

    label: str
    peak_force: float
    at_step: int

    def __post_init__(self):
        if self.label not in ("success", "slip", "damage"):
            raise ValueError(f"unknown outcome label {self.label!r}")


def classify_outcome(
    trace: Sequence[Tuple[float, float, bool]], obj: ObjectModel
) -> GraspOutcome:
    """Label a grasp episode from its (force, opening, lifted) trace.

    Damage wins if any force exceeded the object's threshold; otherwise the
    grasp slipped if the force at the first lifted step was below the
    friction-derived minimum; otherwise success.
    """
    if len(trace) == 0:
        raise EmptyTrace("cannot classify an empty trace")
    peak = 0.0
    peak_at = 0
    for i, (force, _opening, _lifted) in enumerate(trace):
        if force > peak:
            peak, peak_at = force, i
    for i, (force, _opening, _lifted) in enumerate(trace):
        if force > obj.damage_threshold:
            return GraspOutcome("damage", peak, i)
    for i, (force, _opening, lifted) in enumerate(trace):
        if lifted:
            if force < obj.min_holding_force:
                return GraspOutcome("slip", peak, i)
            break
    return GraspOutcome("success", peak, peak_at)


class PositionOnlyPolicy:
    """Close to a fixed opening regardless of force (the no-feedback operator)."""

    def __init__(self, obj: ObjectModel, squeeze_mm: float = 15.0):
        self.target = max(0.0, obj.free_size - squeeze_mm)

    def target_opening(self, state: GripperState, force_norm: float) -> float:
        return self.target

    def settled(self, state: GripperState, force_norm: float) -> bool:
        return state.opening <= self.target + 1e-9


class ForceCappedPolicy:
    """Close until the normalized reading hits a cap, then hold (feedback operator).

    The default cap is 10% above the object's minimum holding force,
    expressed as a fraction of the sensor's full scale.
    """

    def __init__(self, obj: ObjectModel, f_max: float = 20.0, cap: float | None = None):
        if cap is None:
            cap = 1.1 * obj.min_holding_force / f_max
        self.cap = cap
        self._hold_at: float | None = None

    def target_opening(self, state: GripperState, force_norm: float) -> float:
        if self._hold_at is None and force_norm >= self.cap:
            self._hold_at = state.opening
        return 0.0 if self._hold_at is None else self._hold_at

    def settled(self, state: GripperState, force_norm: float) -> bool:
        return self._hold_at is not None


POLICY_KINDS = ("position_only", "force_capped")


def scripted_policy(kind: str, obj: ObjectModel, **kwargs):
    """Build a per-tick gripper command policy of the given kind."""
    if kind == "position_only":
        return PositionOnlyPolicy(obj, **kwargs)
    if kind == "force_capped":
        return ForceCappedPolicy(obj, **kwargs)
    raise ValueError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")
