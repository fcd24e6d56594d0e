import { describe, expect, it } from "vitest";

import {
  applyServerMessage,
  heldKeysToPoseDelta,
  initialConsoleState,
  noteCommandSent,
  triggerToGripper,
} from "../src/console.js";
import { StateMsg } from "../src/protocol.js";

function stateMsg(overrides: Partial<StateMsg> = {}): StateMsg {
  return {
    type: "state",
    tick: 5,
    time_s: 0.05,
    joints: [0, 0, 0, 0, 0, 0],
    ee_pose: [0, 0, 0, 1, 0, 0, 0],
    opening_mm: 85,
    force_norm: 0.25,
    events: [],
    frames: Array.from({ length: 7 }, () => [0, 0, 0]),
    recording: false,
    ...overrides,
  };
}

describe("telemetry reduction", () => {
  it("every rendered value traces to a received record", () => {
    let state = initialConsoleState();
    expect(state.telemetry).toBeNull();
    const msg = stateMsg({ force_norm: 0.42 });
    state = applyServerMessage(state, msg);
    expect(state.telemetry).toBe(msg);
    expect(state.telemetry!.force_norm).toBe(0.42);
  });

  it("damage/slip/clamp events surface as alerts", () => {
    let state = initialConsoleState();
    state = applyServerMessage(state, stateMsg({ events: ["clamp"] }));
    state = applyServerMessage(state, stateMsg({ events: ["slip", "damage"] }));
    expect(state.alerts.map((a) => a.kind)).toEqual(["clamp", "slip", "damage"]);
  });

  it("damage episode end raises a modal alert with the peak force", () => {
    let state = initialConsoleState();
    state = applyServerMessage(state, {
      type: "episode_end",
      outcome: "damage",
      peak_force: 8.16,
    });
    const modal = state.alerts.find((a) => a.modal);
    expect(modal).toBeDefined();
    expect(modal!.text).toContain("8.16");
    expect(state.lastEpisode!.outcome).toBe("damage");
  });

  it("server errors set the banner", () => {
    const state = applyServerMessage(initialConsoleState(), {
      type: "error",
      reason: "busy: session active",
    });
    expect(state.status).toBe("error");
    expect(state.banner).toContain("busy");
  });
});

describe("command mirrors", () => {
  it("clutch state mirrors the last sent clutch command", () => {
    let state = initialConsoleState();
    expect(state.clutchEngaged).toBe(false);
    state = noteCommandSent(state, { type: "clutch", engaged: true });
    expect(state.clutchEngaged).toBe(true);
    state = noteCommandSent(state, { type: "clutch", engaged: false });
    expect(state.clutchEngaged).toBe(false);
  });

  it("recording flag follows record commands and the recorded ack", () => {
    let state = initialConsoleState();
    state = noteCommandSent(state, { type: "record", action: "start" });
    expect(state.recordingRequested).toBe(true);
    state = applyServerMessage(state, { type: "recorded", path: "x.jsonl" });
    expect(state.recordingRequested).toBe(false);
  });
});

describe("input mapping", () => {
  it("no held keys produce no message", () => {
    expect(heldKeysToPoseDelta(new Set())).toBeNull();
  });

  it("opposed keys cancel", () => {
    expect(heldKeysToPoseDelta(new Set(["w", "s"]))).toBeNull();
  });

  it("full trigger closes to zero", () => {
    const msg = triggerToGripper(1.0);
    expect(msg).toEqual({ type: "gripper", target_opening_mm: 0 });
  });

  it("released trigger opens fully", () => {
    const msg = triggerToGripper(0.0) as { target_opening_mm: number };
    expect(msg.target_opening_mm).toBe(85);
  });

  it("trigger values clamp into range", () => {
    const over = triggerToGripper(1.4) as { target_opening_mm: number };
    expect(over.target_opening_mm).toBe(0);
  });
});
