/**
 * Outgoing command pacer: bounds the command rate regardless of input event
 * rate, while never losing discrete toggles.
 *
 * Continuous commands (pose_delta, gripper) coalesce: a newer one replaces
 * the queued one of the same type. Discrete commands (clutch, record,
 * select_object) queue in order. At most one message leaves per minimum
 * interval (default 1/30 s).
 */
import { ClientMessage } from "./protocol.js";

const COALESCED_TYPES = new Set(["pose_delta", "gripper"]);

export class CommandPacer {
  private readonly minIntervalMs: number;
  private readonly send: (msg: ClientMessage) => void;
  private queue: ClientMessage[] = [];
  private lastSentMs = -Infinity;
  /** Count of messages actually sent (for rate verification). */
  sentCount = 0;

  constructor(send: (msg: ClientMessage) => void, maxPerSecond = 30) {
    this.send = send;
    this.minIntervalMs = 1000 / maxPerSecond;
  }

  /** Queue a command; coalescible types replace their queued predecessor. */
  offer(msg: ClientMessage): void {
    if (COALESCED_TYPES.has(msg.type)) {
      const idx = this.queue.findIndex((m) => m.type === msg.type);
      if (idx >= 0) {
        this.queue[idx] = msg;
        return;
      }
    }
    this.queue.push(msg);
  }

  /** Release at most one queued message if the rate budget allows. */
  pump(nowMs: number): void {
    if (this.queue.length === 0) return;
    if (nowMs - this.lastSentMs < this.minIntervalMs) return;
    const msg = this.queue.shift()!;
    this.lastSentMs = nowMs;
    this.sentCount += 1;
    this.send(msg);
  }

  pending(): number {
    return this.queue.length;
  }
}
