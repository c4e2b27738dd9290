/**
 * WebSocket client: validation on both directions, auto-retry with
 * backoff, and snapshot-based resynchronization after reconnects.
 */

import {
  ClientMessage,
  parseServerMessage,
  parseTensor,
  ServerMessage,
  validateClientMessage,
} from "./protocol.js";

export interface ConnectionEvents {
  onMessage: (msg: ServerMessage, binary?: Float32Array) => void;
  onStatus: (status: "connecting" | "connected" | "disconnected") => void;
}

export class Connection {
  private socket: WebSocket | null = null;
  private url: string;
  private events: ConnectionEvents;
  private retryMs = 500;
  private closed = false;
  private awaitingBinaryFor: ServerMessage | null = null;
  private everConnected = false;

  constructor(url: string, events: ConnectionEvents) {
    this.url = url;
    this.events = events;
    this.open();
  }

  private open(): void {
    this.events.onStatus("connecting");
    const socket = new WebSocket(this.url);
    socket.binaryType = "arraybuffer";
    this.socket = socket;

    socket.onopen = () => {
      this.retryMs = 500;
      this.events.onStatus("connected");
      if (this.everConnected) {
        // resynchronize the session state after a reconnect
        this.send({ type: "get_snapshot" });
      }
      this.everConnected = true;
    };
    socket.onmessage = (event) => {
      if (typeof event.data === "string") {
        let parsed: unknown;
        try {
          parsed = JSON.parse(event.data);
        } catch {
          return;
        }
        const msg = parseServerMessage(parsed);
        if (!msg) return;
        if (msg.type === "mesh") {
          // the vertex tensor follows as one binary frame
          this.awaitingBinaryFor = msg;
          return;
        }
        this.events.onMessage(msg);
      } else {
        const header = this.awaitingBinaryFor;
        this.awaitingBinaryFor = null;
        if (!header) return;
        try {
          const tensor = parseTensor(event.data as ArrayBuffer);
          this.events.onMessage(header, tensor.data);
        } catch {
          // drop malformed tensor frames; the next update supersedes them
        }
      }
    };
    socket.onclose = () => {
      this.events.onStatus("disconnected");
      if (!this.closed) {
        setTimeout(() => this.open(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 10_000);
      }
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  send(msg: ClientMessage): void {
    validateClientMessage(msg);
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
