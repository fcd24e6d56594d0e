/**
 * Session-protocol message types and codecs.
 *
 * The wire format is newline-delimited JSON, one object per line, each with
 * a "type" field. Units: meters, radians, millimeters, normalized force.
 */

export interface Hello {
  type: "hello";
  name: string;
}

export interface PoseDelta {
  type: "pose_delta";
  dx: number;
  dy: number;
  dz: number;
  droll: number;
  dpitch: number;
  dyaw: number;
}

export interface Clutch {
  type: "clutch";
  engaged: boolean;
}

export interface Gripper {
  type: "gripper";
  target_opening_mm: number;
}

export interface RecordCmd {
  type: "record";
  action: "start" | "stop";
}

export interface SelectObject {
  type: "select_object";
  name: string;
}

export type ClientMessage =
  | Hello
  | PoseDelta
  | Clutch
  | Gripper
  | RecordCmd
  | SelectObject;

export interface StateMsg {
  type: "state";
  tick: number;
  time_s: number;
  joints: number[];
  ee_pose: number[]; // [x, y, z, qw, qx, qy, qz]
  opening_mm: number;
  force_norm: number;
  events: string[];
  frames: number[][]; // 7 joint-origin positions for drawing
  recording: boolean;
}

export interface EpisodeEnd {
  type: "episode_end";
  outcome: "success" | "slip" | "damage";
  peak_force: number;
}

export interface ErrorMsg {
  type: "error";
  reason: string;
}

export interface Recorded {
  type: "recorded";
  path: string;
}

export type ServerMessage = StateMsg | EpisodeEnd | ErrorMsg | Recorded;

export class ProtocolError extends Error {}

export function encodeClient(msg: ClientMessage): string {
  return JSON.stringify(msg) + "\n";
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isNumberArray(v: unknown, length?: number): v is number[] {
  return (
    Array.isArray(v) &&
    (length === undefined || v.length === length) &&
    v.every(isFiniteNumber)
  );
}

/** Parse and validate one server line. Throws ProtocolError on garbage. */
export function parseServer(line: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`not valid JSON: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || !("type" in raw)) {
    throw new ProtocolError("message must be an object with a type field");
  }
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "state": {
      if (
        !isFiniteNumber(msg.tick) ||
        !isFiniteNumber(msg.time_s) ||
        !isNumberArray(msg.joints, 6) ||
        !isNumberArray(msg.ee_pose, 7) ||
        !isFiniteNumber(msg.opening_mm) ||
        !isFiniteNumber(msg.force_norm) ||
        msg.force_norm < 0 ||
        msg.force_norm > 1 ||
        !Array.isArray(msg.events) ||
        !Array.isArray(msg.frames) ||
        msg.frames.length !== 7 ||
        !msg.frames.every((f) => isNumberArray(f, 3))
      ) {
        throw new ProtocolError("malformed state message");
      }
      return msg as unknown as StateMsg;
    }
    case "episode_end": {
      if (
        (msg.outcome !== "success" &&
          msg.outcome !== "slip" &&
          msg.outcome !== "damage") ||
        !isFiniteNumber(msg.peak_force)
      ) {
        throw new ProtocolError("malformed episode_end message");
      }
      return msg as unknown as EpisodeEnd;
    }
    case "error": {
      if (typeof msg.reason !== "string") {
        throw new ProtocolError("malformed error message");
      }
      return msg as unknown as ErrorMsg;
    }
    case "recorded": {
      if (typeof msg.path !== "string") {
        throw new ProtocolError("malformed recorded message");
      }
      return msg as unknown as Recorded;
    }
    default:
      throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
}
