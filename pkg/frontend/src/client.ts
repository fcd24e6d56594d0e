/**
 * Operator client: one connection, one console state, one command pacer.
 *
 * The client owns the reconnect loop (backoff, banner on refusal) and keeps
 * the pacer pumped so command rate stays bounded no matter how fast input
 * events arrive.
 */
import {
  Backoff,
  Connection,
  openConnection,
} from "./connection.js";
import {
  ConsoleState,
  applyServerMessage,
  initialConsoleState,
  noteCommandSent,
} from "./console.js";
import { CommandPacer } from "./pacer.js";
import {
  ClientMessage,
  ProtocolError,
  ServerMessage,
  encodeClient,
  parseServer,
} from "./protocol.js";

export interface ClientOptions {
  operatorName?: string;
  maxCommandsPerSecond?: number;
  /** Injectable clock/timer for tests. */
  now?: () => number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  /** Pump interval for the pacer, ms. */
  pumpIntervalMs?: number;
  reconnect?: boolean;
}

export class OperatorClient {
  state: ConsoleState = initialConsoleState();
  readonly pacer: CommandPacer;
  private readonly endpoint: string;
  private readonly opts: Required<Pick<ClientOptions, "operatorName" | "reconnect">> &
    ClientOptions;
  private conn: Connection | null = null;
  private readonly backoff = new Backoff();
  private readonly listeners: Array<(s: ConsoleState) => void> = [];
  private readonly messageListeners: Array<(m: ServerMessage) => void> = [];
  private closed = false;
  private pumpTimer: ReturnType<typeof setInterval> | null = null;

  constructor(endpoint: string, opts: ClientOptions = {}) {
    this.endpoint = endpoint;
    this.opts = { operatorName: "operator", reconnect: true, ...opts };
    this.pacer = new CommandPacer(
      (msg) => this.transmit(msg),
      opts.maxCommandsPerSecond ?? 30,
    );
  }

  onState(listener: (s: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  onMessage(listener: (m: ServerMessage) => void): void {
    this.messageListeners.push(listener);
  }

  private setState(next: ConsoleState): void {
    this.state = next;
    for (const fn of this.listeners) fn(next);
  }

  private now(): number {
    return this.opts.now ? this.opts.now() : Date.now();
  }

  async connect(): Promise<void> {
    this.setState({ ...this.state, status: "connecting", banner: null });
    try {
      this.conn = await openConnection(this.endpoint, {
        onOpen: () => {
          this.backoff.reset();
          this.setState({ ...this.state, status: "connected", banner: null });
          this.conn?.send(
            encodeClient({ type: "hello", name: this.opts.operatorName }),
          );
        },
        onLine: (line) => this.handleLine(line),
        onError: (message) => {
          this.setState({
            ...this.state,
            status: "error",
            banner: `connection error: ${message}`,
          });
        },
        onClose: () => this.handleClose(),
      });
    } catch (err) {
      this.setState({
        ...this.state,
        status: "error",
        banner: `connection failed: ${(err as Error).message}`,
      });
      this.scheduleReconnect();
      return;
    }
    if (this.pumpTimer === null) {
      const interval = this.opts.pumpIntervalMs ?? 10;
      this.pumpTimer = setInterval(() => this.pacer.pump(this.now()), interval);
    }
  }

  private handleLine(line: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServer(line);
    } catch (err) {
      if (err instanceof ProtocolError) {
        // Malformed telemetry is dropped; the session survives.
        console.warn(`dropping malformed telemetry: ${err.message}`);
        return;
      }
      throw err;
    }
    this.setState(applyServerMessage(this.state, msg));
    for (const fn of this.messageListeners) fn(msg);
  }

  private handleClose(): void {
    if (this.state.status !== "error") {
      this.setState({ ...this.state, status: "disconnected" });
    }
    this.conn = null;
    this.scheduleReconnect();
  }

  private scheduleReconnect(): void {
    if (this.closed || !this.opts.reconnect) return;
    const delay = this.backoff.next();
    const schedule = this.opts.setTimeoutFn ?? setTimeout;
    schedule(() => {
      if (!this.closed) void this.connect();
    }, delay);
  }

  /** Sends only while connected; commands never originate offline. */
  private transmit(msg: ClientMessage): void {
    if (this.state.status !== "connected" || this.conn === null) return;
    this.conn.send(encodeClient(msg));
    this.setState(noteCommandSent(this.state, msg));
  }

  command(msg: ClientMessage): void {
    if (this.state.status !== "connected") return;
    this.pacer.offer(msg);
  }

  /** Immediate pump for harnesses that drive their own clock. */
  pump(nowMs?: number): void {
    this.pacer.pump(nowMs ?? this.now());
  }

  close(): void {
    this.closed = true;
    if (this.pumpTimer !== null) {
      clearInterval(this.pumpTimer);
      this.pumpTimer = null;
    }
    this.conn?.close();
    this.conn = null;
  }
}
