import { describe, expect, it } from "vitest";

import { armSketch, gaugeView } from "../src/gauge.js";
import { StateMsg } from "../src/protocol.js";

describe("force gauge", () => {
  it("zero force shows an empty gauge", () => {
    const view = gaugeView(0);
    expect(view.fraction).toBe(0);
    expect(view.level).toBe("ok");
  });

  it("full force shows a full gauge with warning color", () => {
    const view = gaugeView(1);
    expect(view.fraction).toBe(1);
    expect(view.level).toBe("max");
  });

  it("the fraction is exactly the telemetry value", () => {
    for (const v of [0.0649, 0.3333333333333333, 0.9999]) {
      expect(gaugeView(v).fraction).toBe(v);
    }
  });

  it("high readings warn before saturation", () => {
    expect(gaugeView(0.85).level).toBe("high");
  });
});

describe("arm sketch", () => {
  const telemetry: StateMsg = {
    type: "state",
    tick: 0,
    time_s: 0,
    joints: [0, 0, 0, 0, 0, 0],
    ee_pose: [0.2, 0.1, 0.3, 1, 0, 0, 0],
    opening_mm: 85,
    force_norm: 0,
    events: [],
    frames: [
      [0, 0, 0],
      [0, 0, 0.15],
      [-0.24, 0, 0.15],
      [-0.24, 0, -0.06],
      [-0.24, -0.11, -0.06],
      [-0.24, -0.11, 0.02],
      [-0.28, -0.11, 0.31],
    ],
    recording: false,
  };

  it("projects all seven server-provided frames", () => {
    const sketch = armSketch(telemetry, 800, 400);
    expect(sketch.top).toHaveLength(7);
    expect(sketch.side).toHaveLength(7);
  });

  it("keeps the polyline inside the viewport for in-reach frames", () => {
    const sketch = armSketch(telemetry, 800, 400);
    for (const [x, y] of [...sketch.top, ...sketch.side]) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(800);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(400);
    }
  });

  it("the base projects to the viewport center in top view", () => {
    const sketch = armSketch(telemetry, 800, 400);
    expect(sketch.top[0]).toEqual([400, 200]);
  });
});
