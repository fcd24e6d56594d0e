/**
 * Render models for the force gauge and the arm sketch.
 *
 * These are pure projections of telemetry; the DOM layer just draws them.
 * The gauge value IS the server's force_norm, untransformed.
 */
import { StateMsg } from "./protocol.js";

export type GaugeLevel = "ok" | "high" | "max";

export interface GaugeView {
  /** Fill fraction, exactly the telemetry force_norm. */
  fraction: number;
  level: GaugeLevel;
  label: string;
}

export function gaugeView(forceNorm: number): GaugeView {
  const level: GaugeLevel = forceNorm >= 1 ? "max" : forceNorm >= 0.8 ? "high" : "ok";
  return { fraction: forceNorm, level, label: `${(forceNorm * 100).toFixed(1)}%` };
}

export interface ArmSketch {
  /** Top view: (x, y) pixels per joint origin. */
  top: Array<[number, number]>;
  /** Side view: (x, z) pixels per joint origin. */
  side: Array<[number, number]>;
}

/**
 * Project the server-provided joint frames into two 2-D polylines.
 * The server computes the kinematics; the console never re-derives them.
 */
export function armSketch(
  telemetry: StateMsg,
  widthPx: number,
  heightPx: number,
  reachM = 0.7,
): ArmSketch {
  const scale = Math.min(widthPx, heightPx) / (2 * reachM);
  const cx = widthPx / 2;
  const cy = heightPx / 2;
  // Joints can dip below the base plane, so the side view's z = 0 line sits
  // at three quarters height rather than the bottom edge.
  const baseY = heightPx * 0.75;
  const top: Array<[number, number]> = [];
  const side: Array<[number, number]> = [];
  for (const frame of telemetry.frames) {
    const [x = 0, y = 0, z = 0] = frame;
    top.push([cx + x * scale, cy - y * scale]);
    side.push([cx + x * scale, baseY - z * scale]);
  }
  return { top, side };
}
