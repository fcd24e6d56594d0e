"""Real-time orchestrator: transform → IK → contact → sensing → torque.

The control loop is the single owner of SessionState. In scripted and replay
modes simulated time drives the loop (tick k is exactly k/control_hz); live
mode paces ticks to the wall clock and coalesces operator input with
latest-command-wins. Client I/O talks to the loop only through a latest-wins
command slot and a bounded drop-oldest telemetry queue.

The session protocol is newline-delimited JSON over a local TCP socket.
Client→server: hello, pose_delta, clutch, gripper, record, select_object.
Server→client: state, episode_end, error. Units: meters, radians,
millimeters, normalized force.
"""
from __future__ import annotations

import json
import math
import queue
import socket
import threading
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from . import frames as frames_mod
from . import gripper_sim as grip
from . import wire_protocol as wire
from .dataset import (
    DEFAULT_A_MAX,
    Observation,
    TrajectoryRecorder,
    export_trajectory,
    object_params_dict,
)
from .frames import ClutchState, FrameTransform, TrackerSample, clamp_workspace
from .geometry import Pose, quat_from_rpy, quat_mul, quat_normalize
from .gripper_sim import (
    EmptyTrace,
    GraspOutcome,
    GripperState,
    ObjectModel,
    PadMechanism,
    classify_outcome,
)
from .haptics import ForceSample, HapticsParams, TorqueCommand
from .kinematics import (
    DHTable,
    default_dh_table,
    fk_frames,
    forward_kinematics,
    inverse_kinematics,
    select_solution,
)

# A well-conditioned elbow-up ready pose (tool pointing down).
HOME_JOINTS = np.array([0.0, -np.pi / 2, np.pi / 2, -np.pi / 2, -np.pi / 2, 0.0])


class EpisodeTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class ServerConfig:
    control_hz: float = 100.0
    record_decimation: int = 10
    max_joint_vel: float = 1.0  # rad/s
    workspace_radius: float = 0.30  # m
    mode: str = "scripted"  # live | replay | scripted
    publish_decimation: int = 2  # telemetry every N ticks (live mode)
    max_ticks: int = 6000

    def __post_init__(self):
        if self.control_hz <= 0 or self.record_decimation < 1:
            raise ValueError("control_hz must be positive, record_decimation >= 1")
        if self.mode not in ("live", "replay", "scripted"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.publish_decimation < 1:
            raise ValueError("publish_decimation must be >= 1")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_hz

    @property
    def record_hz(self) -> float:
        return self.control_hz / self.record_decimation


@dataclass(frozen=True)
class RigParams:
    """Everything describing the simulated rig, separate from loop timing."""

    dh: DHTable = field(default_factory=default_dh_table)
    haptics: HapticsParams = HapticsParams()
    mech: PadMechanism = PadMechanism()
    stroke: float = grip.DEFAULT_STROKE_MM
    gripper_speed: float = grip.DEFAULT_MAX_SPEED_MM_S
    transform: FrameTransform = field(default_factory=FrameTransform.identity)
    input_scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    clutch_bypass: bool = False  # always-engaged mode (scripted episodes)
    home_joints: np.ndarray = field(default_factory=lambda: HOME_JOINTS.copy())
    workspace_center: Optional[np.ndarray] = None  # default: home tool position
    a_max: np.ndarray = field(default_factory=lambda: DEFAULT_A_MAX.copy())
    board_link_tap: bool = True
    objects: dict = field(default_factory=lambda: dict(grip.DEFAULT_OBJECTS))
    approach_depth: float = 0.12  # m below home where the grasp happens
    lift_height: float = 0.10  # m of lift ending an episode
    lift_detect: float = 0.02  # m of rise before the object counts as lifted
    # Scripted-operator pacing: waypoint and squeeze rates slow enough that
    # 10 Hz deltas stay within the default action scales (no clamping flags).
    cartesian_speed: float = 0.08  # m/s
    grip_command_speed: float = 40.0  # mm/s of commanded-opening ramp


@dataclass(frozen=True)
class OperatorCommand:
    """One coalesced operator input; any field may be absent."""

    tracker: Optional[TrackerSample] = None
    pose_delta: Optional[np.ndarray] = None  # dx,dy,dz (m), droll,dpitch,dyaw (rad)
    gripper_mm: Optional[float] = None
    clutch_engage: Optional[bool] = None
    select_object: Optional[str] = None


@dataclass(frozen=True)
class SessionState:
    """Owned by the control loop; everything the pipeline evolves."""

    joints: np.ndarray
    gripper: GripperState
    clutch: ClutchState
    obj: Optional[ObjectModel]
    episode_id: str
    tick: int
    operator_pose: Pose  # virtual tracked-hand pose (operator frame)
    target_pose: Pose  # last commanded robot-frame target
    # Memo of the last IK solve: (target bytes, selected joints or None if
    # unreachable, singular-branch count). Holding a pose is the common case
    # and re-solving it every tick is pure waste; the memo reproduces the
    # same events and the same selected branch.
    ik_memo: Optional[tuple] = None


@dataclass(frozen=True)
class WireTap:
    """Decoded board-link frames mirroring this tick's values."""

    force_report: wire.ForceReport
    torque_command: wire.TorqueCommand
    telemetry: wire.HostTelemetry


@dataclass
class TickReport:
    """Everything observable about one control tick (emitted exactly once)."""

    tick: int
    time_s: float
    joints: np.ndarray
    ee_pose: Pose
    opening_mm: float
    contact_force: float  # object-side newtons
    force: ForceSample  # sensor-side chain readings
    torque: TorqueCommand
    events: List[str]
    recording: bool
    frames: np.ndarray  # (7,3) joint-origin positions for drawing
    target_pose: Pose
    wire: Optional[WireTap] = None


def initial_state(rig: RigParams, episode_id: str = "session-0") -> SessionState:
    ee = forward_kinematics(rig.home_joints, rig.dh)
    return SessionState(
        joints=rig.home_joints.copy(),
        gripper=GripperState(
            opening=rig.stroke, commanded_opening=rig.stroke, stroke=rig.stroke
        ),
        clutch=frames_mod.disengage(),
        obj=None,
        episode_id=episode_id,
        tick=0,
        operator_pose=ee,  # virtual hand starts at the tool pose
        target_pose=ee,
    )


def _apply_pose_delta(p: Pose, delta, scale) -> Pose:
    delta = np.asarray(delta, dtype=float).reshape(6)
    pos = p.position + delta[:3] * scale
    rot = quat_normalize(quat_mul(p.orientation, quat_from_rpy(*delta[3:])))
    return Pose(pos, rot)


def tick(
    state: SessionState,
    command: Optional[OperatorCommand],
    cfg: ServerConfig,
    rig: RigParams,
) -> Tuple[SessionState, TickReport]:
    """Advance the pipeline one control period.

    Order: clutch/transform → workspace clamp → IK → branch selection →
    per-joint velocity clamp → gripper contact → sensing chain → reaction
    torque. Unreachable or fully-singular targets hold the previous joints
    and flag an event; nothing here raises on operator input.
    """
    events: List[str] = []
    workspace_center = (
        rig.workspace_center
        if rig.workspace_center is not None
        else forward_kinematics(rig.home_joints, rig.dh).position
    )

    obj = state.obj
    operator_pose = state.operator_pose
    clutch = state.clutch
    gripper = state.gripper

    if command is not None:
        if command.select_object is not None:
            obj = rig.objects[command.select_object]
        if command.tracker is not None:
            operator_pose = command.tracker.pose
        elif command.pose_delta is not None:
            operator_pose = _apply_pose_delta(
                operator_pose, command.pose_delta, rig.input_scale
            )
        if command.gripper_mm is not None:
            gripper = replace(
                gripper,
                commanded_opening=min(max(command.gripper_mm, 0.0), gripper.stroke),
            )

    sample = TrackerSample(state.tick * cfg.dt, operator_pose)
    need_robot_ee = not rig.clutch_bypass or (
        command is not None and command.clutch_engage
    )
    robot_ee = (
        forward_kinematics(state.joints, rig.dh) if need_robot_ee else None
    )

    if command is not None and command.clutch_engage is not None:
        if command.clutch_engage and not clutch.engaged:
            clutch = frames_mod.engage(sample, robot_ee, rig.transform)
        elif not command.clutch_engage and clutch.engaged:
            clutch = frames_mod.disengage()

    if rig.clutch_bypass:
        commanded = frames_mod.apply_transform(rig.transform, operator_pose)
    else:
        clutch, commanded = frames_mod.clutch_step(
            clutch, sample, robot_ee, rig.transform
        )

    target = state.target_pose if commanded is None else commanded
    clamped = clamp_workspace(target, workspace_center, cfg.workspace_radius)
    if clamped is not target and not np.array_equal(clamped.position, target.position):
        events.append("clamp")
    target = clamped

    joints = state.joints
    target_key = target.as_vector().tobytes()
    if state.ik_memo is not None and state.ik_memo[0] == target_key:
        _, desired, singular_dropped = state.ik_memo
    else:
        ik = inverse_kinematics(target, rig.dh)
        singular_dropped = ik.singular_dropped
        desired = select_solution(ik.solutions, joints) if len(ik) else None
    ik_memo = (target_key, desired, singular_dropped)
    if singular_dropped:
        events.append("singular")
    if desired is None:
        events.append("unreachable")
    else:
        max_step = cfg.max_joint_vel * cfg.dt
        dq = np.clip(desired - joints, -max_step, max_step)
        joints = joints + dq

    if obj is not None:
        gripper, sensor_force = grip.contact_step(
            gripper, obj, cfg.dt, rig.gripper_speed, rig.mech
        )
        if gripper.contact_force > obj.damage_threshold:
            events.append("damage")
    else:
        gripper = grip.step_opening(gripper, cfg.dt, rig.gripper_speed)
        sensor_force = 0.0

    force = rig.haptics.sample(sensor_force)
    torque = rig.haptics.torque(force.normalized)

    tap = None
    if rig.board_link_tap:
        seq = state.tick & 0xFFFF
        tap = WireTap(
            force_report=wire.decode(
                wire.encode(wire.ForceReport(round(force.v_out * 1000.0), seq))
            ),
            torque_command=wire.decode(
                wire.encode(wire.TorqueCommand(round(torque.stick_a * 1000.0)))
            ),
            telemetry=wire.decode(
                wire.encode(
                    wire.HostTelemetry(
                        round(force.normalized * 1000.0),
                        round(gripper.opening * 100.0),
                        seq,
                    )
                )
            ),
        )

    new_state = SessionState(
        joints=joints,
        gripper=gripper,
        clutch=clutch,
        obj=obj,
        episode_id=state.episode_id,
        tick=state.tick + 1,
        operator_pose=operator_pose,
        target_pose=target,
        ik_memo=ik_memo,
    )
    frames_after = fk_frames(joints, rig.dh)
    report = TickReport(
        tick=state.tick,
        time_s=state.tick / cfg.control_hz,
        joints=joints.copy(),
        ee_pose=Pose.from_matrix(frames_after[6]),
        opening_mm=gripper.opening,
        contact_force=gripper.contact_force,
        force=force,
        torque=torque,
        events=events,
        recording=state.tick % cfg.record_decimation == 0,
        frames=frames_after[:, :3, 3].copy(),
        target_pose=target,
        wire=tap,
    )
    return new_state, report


class EpisodeTracker:
    """Shared grasp-episode bookkeeping for scripted and live sessions.

    Latches the grasp height at first contact, raises the lifted flag once
    the tool has risen past the detection threshold, appends a slip event at
    the first lifted tick if the grip is too weak, and decides termination
    (damage or completed lift).
    """

    def __init__(self, obj: ObjectModel, rig: RigParams):
        self.obj = obj
        self.rig = rig
        self.trace: List[Tuple[float, float, bool]] = []
        self.grasp_z: Optional[float] = None
        self.done = False
        self._lift_seen = False

    def update(self, report: TickReport) -> None:
        z = float(report.ee_pose.position[2])
        if self.grasp_z is None and report.contact_force > 0.0:
            self.grasp_z = z
        lifted = self.grasp_z is not None and z >= self.grasp_z + self.rig.lift_detect
        if lifted and not self._lift_seen:
            self._lift_seen = True
            if report.contact_force < self.obj.min_holding_force:
                report.events.append("slip")
        self.trace.append((report.contact_force, report.opening_mm, lifted))
        if "damage" in report.events:
            self.done = True
        elif self.grasp_z is not None and z >= self.grasp_z + self.rig.lift_height - 1e-9:
            self.done = True

    def outcome(self) -> GraspOutcome:
        return classify_outcome(self.trace, self.obj)


def scripted_rig(rig: Optional[RigParams] = None) -> RigParams:
    """Rig variant for scripted runs: identity mapping, always engaged."""
    base = rig if rig is not None else RigParams()
    return replace(base, clutch_bypass=True, transform=FrameTransform.identity())


def run_episode(
    cfg: ServerConfig,
    policy,
    obj: ObjectModel,
    rig: Optional[RigParams] = None,
    grasp_offset=(0.0, 0.0),
) -> Tuple[List[TickReport], GraspOutcome]:
    """Drive one deterministic scripted grasp: approach, close, lift.

    The arm starts at the rig home pose, descends to the grasp pose
    (optionally offset in x/y), runs the gripper policy until it settles,
    then lifts until the episode terminates (lift complete or damage).
    Raises EpisodeTimeout after cfg.max_ticks.
    """
    rig = scripted_rig(rig)
    state = initial_state(rig, episode_id=f"{obj.name}-episode")
    state = replace(state, obj=obj)
    home_ee = forward_kinematics(rig.home_joints, rig.dh)
    grasp_pose = Pose(
        home_ee.position
        + np.array([grasp_offset[0], grasp_offset[1], -rig.approach_depth]),
        home_ee.orientation,
    )
    lift_pose = grasp_pose.translated([0.0, 0.0, rig.lift_height])

    tracker = EpisodeTracker(obj, rig)
    reports: List[TickReport] = []
    phase = "approach"
    last_force_norm = 0.0
    waypoint = home_ee.position.copy()
    step_len = rig.cartesian_speed * cfg.dt
    cmd_opening = state.gripper.opening
    grip_step = rig.grip_command_speed * cfg.dt

    def advance_waypoint(goal):
        remaining = goal - waypoint
        dist = float(np.linalg.norm(remaining))
        if dist <= step_len:
            waypoint[:] = goal
        else:
            waypoint[:] = waypoint + remaining * (step_len / dist)

    def ramp_opening(target):
        nonlocal cmd_opening
        delta = target - cmd_opening
        if abs(delta) <= grip_step:
            cmd_opening = target
        else:
            cmd_opening += math.copysign(grip_step, delta)
        return cmd_opening

    for _ in range(cfg.max_ticks):
        if phase == "approach":
            ee = reports[-1].ee_pose if reports else home_ee
            if ee.position_distance(grasp_pose) < 1e-4:
                phase = "close"
                # Snap the waypoint so the held pose (and the latched grasp
                # height) is the grasp pose itself, not a hair short of it.
                waypoint[:] = grasp_pose.position
        if phase == "close" and policy.settled(state.gripper, last_force_norm):
            phase = "lift"

        if phase == "approach":
            advance_waypoint(grasp_pose.position)
            cmd = OperatorCommand(
                tracker=TrackerSample(
                    state.tick * cfg.dt, Pose(waypoint, home_ee.orientation)
                )
            )
        else:
            # The gripper policy stays in command through the lift so a
            # reached force cap keeps holding.
            if phase == "lift":
                advance_waypoint(lift_pose.position)
            target_mm = policy.target_opening(state.gripper, last_force_norm)
            cmd = OperatorCommand(
                tracker=TrackerSample(
                    state.tick * cfg.dt, Pose(waypoint, home_ee.orientation)
                ),
                gripper_mm=ramp_opening(target_mm),
            )

        state, report = tick(state, cmd, cfg, rig)
        tracker.update(report)
        reports.append(report)
        last_force_norm = report.force.normalized
        if tracker.done:
            return reports, tracker.outcome()
    raise EpisodeTimeout(f"episode did not terminate within {cfg.max_ticks} ticks")


def state_record(report: TickReport) -> dict:
    """The session-protocol state message for one tick."""
    return {
        "type": "state",
        "tick": report.tick,
        "time_s": report.time_s,
        "joints": report.joints.tolist(),
        "ee_pose": report.ee_pose.as_vector().tolist(),
        "opening_mm": report.opening_mm,
        "force_norm": report.force.normalized,
        "events": list(report.events),
        "frames": report.frames.tolist(),
        "recording": report.recording,
    }


def observation_from_report(report: TickReport, stroke: float) -> Observation:
    return Observation(
        joints=report.joints,
        ee_pose=report.ee_pose,
        gripper_pos_norm=report.opening_mm / stroke,
        force_norm=report.force.normalized,
        opening_mm=report.opening_mm,
    )


def rig_meta(rig: RigParams) -> dict:
    """Rig constants stored in trajectory headers so files self-describe."""
    return {
        "haptics": {
            "v_ref": rig.haptics.linearizer.v_ref,
            "r_g": rig.haptics.linearizer.r_g,
            "r_fs": rig.haptics.fsr.r_fs,
            "f_max": rig.haptics.fsr.f_max,
            "k_t": rig.haptics.k_t,
        },
        "gripper": {"stroke": rig.stroke, "max_speed": rig.gripper_speed},
        "pad": {
            "spring_k": rig.mech.spring_k,
            "spring_count": rig.mech.spring_count,
            "preload_f": rig.mech.preload_f,
            "pad_length": rig.mech.pad_length,
        },
    }


def trajectory_from_reports(
    reports: List[TickReport],
    episode_id: str,
    task: str,
    cfg: ServerConfig,
    rig: RigParams,
    obj: Optional[ObjectModel] = None,
    outcome: Optional[GraspOutcome] = None,
    meta: Optional[dict] = None,
):
    """Assemble the 10 Hz trajectory from an episode's tick reports."""
    recorder = TrajectoryRecorder(
        episode_id=episode_id,
        task=task,
        a_max=rig.a_max,
        control_hz=cfg.control_hz,
        record_hz=cfg.record_hz,
        object_params=object_params_dict(obj) if obj is not None else None,
    )
    for report in reports:
        if report.recording:
            recorder.append(observation_from_report(report, rig.stroke))
    traj = recorder.build(outcome)
    traj.meta = {**rig_meta(rig), **(meta or {})}
    return traj


class _LatestSlot:
    """Latest-wins coalescing of operator input between control ticks."""

    def __init__(self):
        self._lock = threading.Lock()
        self._fields = {}

    def merge(self, **updates):
        with self._lock:
            for key, value in updates.items():
                if value is not None:
                    self._fields[key] = value

    def take(self) -> Optional[OperatorCommand]:
        with self._lock:
            if not self._fields:
                return None
            fields, self._fields = self._fields, {}
        return OperatorCommand(**fields)


class ClientProtocolError(ValueError):
    pass


def _parse_client_message(msg) -> dict:
    """Decoded protocol message → command-slot updates. Raises ClientProtocolError."""
    if not isinstance(msg, dict) or "type" not in msg:
        raise ClientProtocolError("message must be an object with a 'type' field")
    kind = msg["type"]
    try:
        if kind == "pose_delta":
            delta = np.array(
                [msg[k] for k in ("dx", "dy", "dz", "droll", "dpitch", "dyaw")],
                dtype=float,
            )
            return {"pose_delta": delta}
        if kind == "clutch":
            return {"clutch_engage": bool(msg["engaged"])}
        if kind == "gripper":
            return {"gripper_mm": float(msg["target_opening_mm"])}
        if kind == "select_object":
            return {"select_object": str(msg["name"])}
        if kind in ("hello", "record"):
            return {}
    except (KeyError, TypeError, ValueError) as exc:
        raise ClientProtocolError(f"malformed {kind} message: {exc}") from exc
    raise ClientProtocolError(f"unknown message type {kind!r}")


class TeleopServer:
    """Single-client session service over a local TCP socket."""

    def __init__(
        self,
        cfg: Optional[ServerConfig] = None,
        rig: Optional[RigParams] = None,
        host: str = "127.0.0.1",
        port: int = 7777,
        out_dir: str = "recordings",
    ):
        self.cfg = cfg if cfg is not None else ServerConfig(mode="live")
        self.rig = rig if rig is not None else RigParams()
        self.out_dir = out_dir
        self._slot = _LatestSlot()
        self._sendq: "queue.Queue[bytes]" = queue.Queue(maxsize=64)
        self._stop = threading.Event()
        self._record_request: "queue.Queue[str]" = queue.Queue()
        self._listener = socket.create_server((host, port))  # raises on busy port
        self.endpoint = self._listener.getsockname()[:2]

    # -- client I/O -------------------------------------------------------

    def _reader(self, conn: socket.socket):
        buf = b""
        try:
            while not self._stop.is_set():
                chunk = conn.recv(4096)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if not line.strip():
                        continue
                    msg = json.loads(line)
                    if isinstance(msg, dict) and msg.get("type") == "record":
                        self._record_request.put(str(msg.get("action", "")))
                    else:
                        self._slot.merge(**_parse_client_message(msg))
        except (ClientProtocolError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            self._send_now(conn, {"type": "error", "reason": str(exc)})
        except OSError:
            pass
        finally:
            self._stop.set()

    def _sender(self, conn: socket.socket):
        try:
            while not self._stop.is_set():
                try:
                    data = self._sendq.get(timeout=0.05)
                except queue.Empty:
                    continue
                conn.sendall(data)
        except OSError:
            self._stop.set()

    def _publish(self, message: dict):
        data = (json.dumps(message) + "\n").encode("utf-8")
        try:
            self._sendq.put_nowait(data)
        except queue.Full:
            try:
                self._sendq.get_nowait()  # drop oldest
            except queue.Empty:
                pass
            try:
                self._sendq.put_nowait(data)
            except queue.Full:
                pass

    @staticmethod
    def _send_now(conn: socket.socket, message: dict):
        try:
            conn.sendall((json.dumps(message) + "\n").encode("utf-8"))
        except OSError:
            pass

    def _reject_extra_clients(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            self._send_now(conn, {"type": "error", "reason": "busy: session active"})
            conn.close()

    @staticmethod
    def _await_hello(conn: socket.socket) -> str:
        conn.settimeout(10.0)
        buf = b""
        while b"\n" not in buf:
            chunk = conn.recv(4096)
            if not chunk:
                raise ClientProtocolError("client closed before hello")
            buf += chunk
        line = buf.split(b"\n", 1)[0]
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ClientProtocolError(f"hello not valid JSON: {exc}") from exc
        if msg.get("type") != "hello":
            raise ClientProtocolError("first message must be hello")
        conn.settimeout(None)
        return str(msg.get("name", "operator"))

    # -- control loop -----------------------------------------------------

    def serve_one_session(self) -> None:
        """Accept one operator, run the control loop until they disconnect."""
        try:
            conn, _addr = self._listener.accept()
        except OSError:
            self._listener.close()
            raise
        try:
            self._await_hello(conn)
        except (ClientProtocolError, TimeoutError) as exc:
            self._send_now(conn, {"type": "error", "reason": str(exc)})
            conn.close()
            self._listener.close()
            return
        threads = [
            threading.Thread(target=self._reader, args=(conn,), daemon=True),
            threading.Thread(target=self._sender, args=(conn,), daemon=True),
            threading.Thread(target=self._reject_extra_clients, daemon=True),
        ]
        for t in threads:
            t.start()

        cfg, rig = self.cfg, self.rig
        state = initial_state(rig, episode_id="live-0")
        recorder: Optional[TrajectoryRecorder] = None
        tracker: Optional[EpisodeTracker] = None
        episode_n = 0
        next_deadline = time.monotonic()
        try:
            while not self._stop.is_set():
                command = self._slot.take()
                if command is not None and command.select_object is not None:
                    if command.select_object not in rig.objects:
                        self._publish(
                            {
                                "type": "error",
                                "reason": f"unknown object {command.select_object!r}",
                            }
                        )
                        command = replace(command, select_object=None)
                    else:
                        tracker = None  # new episode context
                state, report = tick(state, command, cfg, rig)

                if state.obj is not None:
                    if tracker is None:
                        tracker = EpisodeTracker(state.obj, rig)
                    tracker.update(report)

                while True:
                    try:
                        action = self._record_request.get_nowait()
                    except queue.Empty:
                        break
                    if action == "start" and recorder is None:
                        episode_n += 1
                        recorder = TrajectoryRecorder(
                            episode_id=f"live-{episode_n:03d}",
                            task=state.obj.name if state.obj else "freespace",
                            a_max=rig.a_max,
                            control_hz=cfg.control_hz,
                            record_hz=cfg.record_hz,
                            object_params=object_params_dict(state.obj)
                            if state.obj
                            else None,
                        )
                    elif action == "stop" and recorder is not None:
                        self._finish_recording(recorder, tracker)
                        recorder = None

                if recorder is not None and report.recording:
                    recorder.append(observation_from_report(report, rig.stroke))

                if tracker is not None and tracker.done:
                    outcome = tracker.outcome()
                    self._publish(
                        {
                            "type": "episode_end",
                            "outcome": outcome.label,
                            "peak_force": outcome.peak_force,
                        }
                    )
                    if recorder is not None:
                        self._finish_recording(recorder, tracker)
                        recorder = None
                    tracker = None

                if report.tick % cfg.publish_decimation == 0:
                    self._publish(state_record(report))

                next_deadline += cfg.dt
                delay = next_deadline - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:  # fell behind; don't accumulate debt
                    next_deadline = time.monotonic()
        finally:
            self._stop.set()
            try:
                conn.close()
            except OSError:
                pass
            self._listener.close()

    def _finish_recording(self, recorder: TrajectoryRecorder, tracker):
        import os

        outcome = None
        if tracker is not None:
            try:
                outcome = tracker.outcome()
            except EmptyTrace:
                outcome = None
        try:
            traj = recorder.build(outcome)
        except Exception:
            return  # nothing recorded
        os.makedirs(self.out_dir, exist_ok=True)
        path = os.path.join(self.out_dir, f"{traj.episode_id}.jsonl")
        export_trajectory(traj, path)
        self._publish({"type": "recorded", "path": path})

    def stop(self):
        self._stop.set()


def serve(
    cfg: Optional[ServerConfig] = None,
    host: str = "127.0.0.1",
    port: int = 7777,
    rig: Optional[RigParams] = None,
    out_dir: str = "recordings",
    on_ready=None,
) -> None:
    """Bind, serve exactly one operator session, and return when it ends.

    Raises OSError if the endpoint cannot be bound. on_ready, when given, is
    called with (host, port) once listening.
    """
    server = TeleopServer(cfg=cfg, rig=rig, host=host, port=port, out_dir=out_dir)
    if on_ready is not None:
        on_ready(*server.endpoint)
    server.serve_one_session()
