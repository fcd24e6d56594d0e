/**
 * Transport for the session protocol: a reliable byte stream carrying
 * newline-delimited JSON.
 *
 * Endpoints are URLs: tcp://host:port (node, used by the test harness) or
 * ws://host:port (browsers, via a WebSocket bridge in front of the server).
 */

export interface ConnectionEvents {
  onOpen(): void;
  onLine(line: string): void;
  onClose(): void;
  onError(message: string): void;
}

export interface Connection {
  send(data: string): void;
  close(): void;
}

export function parseEndpoint(endpoint: string): {
  scheme: "tcp" | "ws";
  host: string;
  port: number;
} {
  const m = /^(tcp|ws):\/\/([^:/]+):(\d+)\/?$/.exec(endpoint.trim());
  if (!m) {
    throw new Error(`endpoint must look like tcp://host:port, got "${endpoint}"`);
  }
  return { scheme: m[1] as "tcp" | "ws", host: m[2]!, port: Number(m[3]) };
}

/** Split a byte stream into complete lines, buffering the remainder. */
export class LineSplitter {
  private buffer = "";

  push(chunk: string, onLine: (line: string) => void): void {
    this.buffer += chunk;
    for (;;) {
      const idx = this.buffer.indexOf("\n");
      if (idx < 0) break;
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      if (line.trim().length > 0) onLine(line);
    }
  }
}

async function connectTcp(
  host: string,
  port: number,
  events: ConnectionEvents,
): Promise<Connection> {
  const net = await import("node:net");
  const splitter = new LineSplitter();
  const socket = net.createConnection({ host, port });
  socket.setEncoding("utf-8");
  socket.on("connect", () => events.onOpen());
  socket.on("data", (chunk: string) => splitter.push(chunk, events.onLine));
  socket.on("error", (err: Error) => events.onError(err.message));
  socket.on("close", () => events.onClose());
  return {
    send(data: string) {
      socket.write(data);
    },
    close() {
      socket.destroy();
    },
  };
}

function connectWs(
  host: string,
  port: number,
  events: ConnectionEvents,
): Connection {
  const splitter = new LineSplitter();
  const ws = new WebSocket(`ws://${host}:${port}`);
  ws.onopen = () => events.onOpen();
  ws.onmessage = (ev) => splitter.push(String(ev.data), events.onLine);
  ws.onerror = () => events.onError("websocket error");
  ws.onclose = () => events.onClose();
  return {
    send(data: string) {
      if (ws.readyState === WebSocket.OPEN) ws.send(data);
    },
    close() {
      ws.close();
    },
  };
}

export async function openConnection(
  endpoint: string,
  events: ConnectionEvents,
): Promise<Connection> {
  const { scheme, host, port } = parseEndpoint(endpoint);
  if (scheme === "tcp") return connectTcp(host, port, events);
  return connectWs(host, port, events);
}

/** Reconnect backoff: 0.5 s doubling to 8 s, reset on a successful open. */
export class Backoff {
  private delayMs = 500;

  next(): number {
    const d = this.delayMs;
    this.delayMs = Math.min(this.delayMs * 2, 8000);
    return d;
  }

  reset(): void {
    this.delayMs = 500;
  }
}
