/**
 * Browser bootstrap: wires DOM inputs to the operator client and paints the
 * gauge and arm sketch. Everything here is a thin shell over the pure
 * modules; no state lives in the DOM layer.
 */
import { OperatorClient } from "./client.js";
import {
  DEFAULT_INPUT,
  heldKeysToPoseDelta,
  triggerToGripper,
} from "./console.js";
import { armSketch, gaugeView } from "./gauge.js";

const INPUT_POLL_MS = 33; // one pose_delta per poll at most: ≤30 msg/s

export function mountConsole(root: Document): void {
  const endpointInput = root.getElementById("endpoint") as HTMLInputElement;
  const connectBtn = root.getElementById("connect") as HTMLButtonElement;
  const banner = root.getElementById("banner") as HTMLElement;
  const gaugeFill = root.getElementById("gauge-fill") as HTMLElement;
  const gaugeLabel = root.getElementById("gauge-label") as HTMLElement;
  const status = root.getElementById("status") as HTMLElement;
  const alerts = root.getElementById("alerts") as HTMLElement;
  const canvas = root.getElementById("arm") as HTMLCanvasElement;
  const gripSlider = root.getElementById("grip") as HTMLInputElement;
  const recordBtn = root.getElementById("record") as HTMLButtonElement;
  const objectSelect = root.getElementById("object") as HTMLSelectElement;

  let client: OperatorClient | null = null;
  const held = new Set<string>();

  root.addEventListener("keydown", (ev) => {
    const key = (ev as KeyboardEvent).key.toLowerCase();
    if (key === " ") {
      client?.command({
        type: "clutch",
        engaged: !(client?.state.clutchEngaged ?? false),
      });
      return;
    }
    held.add(key);
  });
  root.addEventListener("keyup", (ev) => {
    held.delete((ev as KeyboardEvent).key.toLowerCase());
  });

  setInterval(() => {
    if (client === null) return;
    pollGamepad(client);
    const delta = heldKeysToPoseDelta(held);
    if (delta !== null) client.command(delta);
  }, INPUT_POLL_MS);

  gripSlider.addEventListener("input", () => {
    client?.command(triggerToGripper(Number(gripSlider.value) / 100));
  });
  recordBtn.addEventListener("click", () => {
    const starting = !(client?.state.recordingRequested ?? false);
    client?.command({ type: "record", action: starting ? "start" : "stop" });
  });
  objectSelect.addEventListener("change", () => {
    client?.command({ type: "select_object", name: objectSelect.value });
  });

  connectBtn.addEventListener("click", () => {
    client?.close();
    client = new OperatorClient(endpointInput.value);
    client.onState((state) => {
      status.textContent = state.status;
      banner.textContent = state.banner ?? "";
      banner.style.display = state.banner ? "block" : "none";
      if (state.telemetry) {
        const gauge = gaugeView(state.telemetry.force_norm);
        gaugeFill.style.width = `${gauge.fraction * 100}%`;
        gaugeFill.dataset.level = gauge.level;
        gaugeLabel.textContent = gauge.label;
        drawArm(canvas, state.telemetry);
        rumble(state.telemetry.force_norm);
      }
      alerts.textContent = state.alerts
        .slice(-5)
        .map((a) => `${a.kind}: ${a.text}`)
        .join("\n");
      const modal = state.alerts.find((a) => a.modal);
      if (modal && !alerts.dataset.modalShown) {
        alerts.dataset.modalShown = "1";
        window.alert(modal.text);
      }
    });
    void client.connect();
  });
}

function drawArm(canvas: HTMLCanvasElement, telemetry: Parameters<typeof armSketch>[0]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const sketch = armSketch(telemetry, canvas.width, canvas.height);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const [polyline, color] of [
    [sketch.top, "#4da3ff"],
    [sketch.side, "#ffb04d"],
  ] as const) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 3;
    ctx.beginPath();
    polyline.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
}

/** Optional force surrogate: scale gamepad vibration to the reading. */
function rumble(forceNorm: number): void {
  const pads = navigator.getGamepads?.() ?? [];
  for (const pad of pads) {
    const actuator = (pad as unknown as {
      vibrationActuator?: {
        playEffect(kind: string, params: Record<string, number>): void;
      };
    } | null)?.vibrationActuator;
    if (pad && actuator && forceNorm > 0) {
      actuator.playEffect("dual-rumble", {
        duration: INPUT_POLL_MS,
        weakMagnitude: forceNorm,
        strongMagnitude: forceNorm * 0.5,
      });
    }
  }
}

function pollGamepad(client: OperatorClient): void {
  const pads = navigator.getGamepads?.() ?? [];
  const pad = pads.find((p) => p !== null);
  if (!pad) return;
  const [lx = 0, ly = 0, , ry = 0] = pad.axes;
  const dead = (v: number) => (Math.abs(v) < 0.15 ? 0 : v);
  const dx = -dead(ly) * DEFAULT_INPUT.posStepM;
  const dy = -dead(lx) * DEFAULT_INPUT.posStepM;
  const dz = -dead(ry) * DEFAULT_INPUT.posStepM;
  if (dx !== 0 || dy !== 0 || dz !== 0) {
    client.command({ type: "pose_delta", dx, dy, dz, droll: 0, dpitch: 0, dyaw: 0 });
  }
  const trigger = pad.buttons[7]?.value ?? 0;
  if (trigger > 0.02) {
    client.command(triggerToGripper(trigger));
  }
}
