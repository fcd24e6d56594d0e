/**
 * Console state and input mapping.
 *
 * The state is a pure reduction of received telemetry: every rendered value
 * traces to a server message, never to local guesses. Input events map to
 * protocol commands through the pacer.
 */
import {
  ClientMessage,
  EpisodeEnd,
  ServerMessage,
  StateMsg,
} from "./protocol.js";

export type ConnectionStatus =
  | "disconnected"
  | "connecting"
  | "connected"
  | "error";

export type InputMode = "keyboard" | "gamepad";

export interface Alert {
  kind: "damage" | "slip" | "clamp" | "unreachable" | "singular" | "error";
  text: string;
  /** Damage alerts are modal: they stay until dismissed. */
  modal: boolean;
}

export interface ConsoleState {
  status: ConnectionStatus;
  banner: string | null;
  telemetry: StateMsg | null;
  lastEpisode: EpisodeEnd | null;
  inputMode: InputMode;
  /** Mirrors the last clutch command actually sent to the server. */
  clutchEngaged: boolean;
  /** Mirrors the last record command actually sent to the server. */
  recordingRequested: boolean;
  alerts: Alert[];
}

export function initialConsoleState(): ConsoleState {
  return {
    status: "disconnected",
    banner: null,
    telemetry: null,
    lastEpisode: null,
    inputMode: "keyboard",
    clutchEngaged: false,
    recordingRequested: false,
    alerts: [],
  };
}

const EVENT_ALERTS: Record<string, Alert["kind"]> = {
  damage: "damage",
  slip: "slip",
  clamp: "clamp",
  unreachable: "unreachable",
  singular: "singular",
};

/** Fold one server message into the console state (pure). */
export function applyServerMessage(
  state: ConsoleState,
  msg: ServerMessage,
): ConsoleState {
  switch (msg.type) {
    case "state": {
      const alerts = [...state.alerts];
      for (const event of msg.events) {
        const kind = EVENT_ALERTS[event];
        if (kind !== undefined) {
          alerts.push({
            kind,
            text: `${event} at tick ${msg.tick}`,
            modal: false,
          });
        }
      }
      return { ...state, telemetry: msg, alerts };
    }
    case "episode_end": {
      const alerts = [...state.alerts];
      if (msg.outcome === "damage") {
        alerts.push({
          kind: "damage",
          text: `object damaged (peak force ${msg.peak_force.toFixed(2)} N)`,
          modal: true,
        });
      }
      return { ...state, lastEpisode: msg, alerts };
    }
    case "error":
      return {
        ...state,
        status: "error",
        banner: msg.reason,
        alerts: [
          ...state.alerts,
          { kind: "error", text: msg.reason, modal: false },
        ],
      };
    case "recorded":
      return { ...state, recordingRequested: false };
  }
}

/** Mark a command as actually sent so the mirrored flags stay honest. */
export function noteCommandSent(
  state: ConsoleState,
  msg: ClientMessage,
): ConsoleState {
  if (msg.type === "clutch") {
    return { ...state, clutchEngaged: msg.engaged };
  }
  if (msg.type === "record") {
    return { ...state, recordingRequested: msg.action === "start" };
  }
  return state;
}

export interface InputConfig {
  posStepM: number;
  rotStepRad: number;
  strokeMm: number;
}

export const DEFAULT_INPUT: InputConfig = {
  posStepM: 0.002,
  rotStepRad: 0.01,
  strokeMm: 85,
};

/** Keys held down → one pose_delta command (or null when idle). */
export function heldKeysToPoseDelta(
  held: ReadonlySet<string>,
  cfg: InputConfig = DEFAULT_INPUT,
): ClientMessage | null {
  let dx = 0;
  let dy = 0;
  let dz = 0;
  let droll = 0;
  let dpitch = 0;
  let dyaw = 0;
  if (held.has("w")) dx += cfg.posStepM;
  if (held.has("s")) dx -= cfg.posStepM;
  if (held.has("a")) dy += cfg.posStepM;
  if (held.has("d")) dy -= cfg.posStepM;
  if (held.has("q")) dz += cfg.posStepM;
  if (held.has("e")) dz -= cfg.posStepM;
  if (held.has("arrowup")) dpitch += cfg.rotStepRad;
  if (held.has("arrowdown")) dpitch -= cfg.rotStepRad;
  if (held.has("arrowleft")) dyaw += cfg.rotStepRad;
  if (held.has("arrowright")) dyaw -= cfg.rotStepRad;
  if (held.has("[")) droll += cfg.rotStepRad;
  if (held.has("]")) droll -= cfg.rotStepRad;
  if (dx === 0 && dy === 0 && dz === 0 && droll === 0 && dpitch === 0 && dyaw === 0) {
    return null;
  }
  return { type: "pose_delta", dx, dy, dz, droll, dpitch, dyaw };
}

/** Analog trigger in [0, 1] → gripper target; fully pressed closes to 0 mm. */
export function triggerToGripper(
  value: number,
  cfg: InputConfig = DEFAULT_INPUT,
): ClientMessage {
  const v = Math.min(Math.max(value, 0), 1);
  return { type: "gripper", target_opening_mm: (1 - v) * cfg.strokeMm };
}
