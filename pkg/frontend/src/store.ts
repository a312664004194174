// Connection/session state: the latest config and state frame, staleness
// for the disconnected banner, and a toast queue fed by error replies and
// rejection events (each event fires once, tracked by sequence number).

import type { ConfigMessage, ServerMessage, StateFrame } from "./protocol.js";

export const STALE_AFTER_MS = 1000;

export interface Toast {
  kind: "error" | "rejected" | "info";
  text: string;
}

export class ConsoleStore {
  config: ConfigMessage | null = null;
  state: StateFrame | null = null;
  lastStateAtMs = Number.NEGATIVE_INFINITY;
  connected = false;
  private lastEventSeq = 0;
  private toastQueue: Toast[] = [];

  handle(msg: ServerMessage, nowMs: number): void {
    switch (msg.type) {
      case "config":
        this.config = msg;
        this.connected = true;
        return;
      case "state":
        this.state = msg;
        this.lastStateAtMs = nowMs;
        for (const event of msg.events) {
          if (event.seq > this.lastEventSeq) {
            this.lastEventSeq = event.seq;
            const kind = event.kind === "rejected" ? "rejected" : "info";
            this.toastQueue.push({ kind, text: `${event.cmd}: ${event.message}` });
          }
        }
        return;
      case "error":
        this.toastQueue.push({
          kind: "error",
          text: msg.cmd ? `${msg.cmd}: ${msg.message}` : msg.message,
        });
        return;
      case "ack":
        if (msg.clamped_to !== undefined) {
          this.toastQueue.push({
            kind: "info",
            text: `${msg.cmd}: clamped to ${msg.clamped_to}`,
          });
        }
        return;
    }
  }

  markDisconnected(): void {
    this.connected = false;
  }

  isStale(nowMs: number): boolean {
    return !this.connected || nowMs - this.lastStateAtMs > STALE_AFTER_MS;
  }

  takeToasts(): Toast[] {
    const out = this.toastQueue;
    this.toastQueue = [];
    return out;
  }
}
