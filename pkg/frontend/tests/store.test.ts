import { describe, expect, it } from "vitest";

import { parseServerMessage } from "../src/protocol.js";
import { ConsoleStore, STALE_AFTER_MS } from "../src/store.js";
import { makeConfigMessage, makeStateFrame } from "./fixtures.js";

function msg(obj: unknown) {
  return parseServerMessage(JSON.stringify(obj));
}

describe("ConsoleStore", () => {
  it("goes live on config and tracks state freshness", () => {
    const store = new ConsoleStore();
    expect(store.isStale(0)).toBe(true);
    store.handle(msg(makeConfigMessage()), 0);
    store.handle(msg(makeStateFrame()), 100);
    expect(store.isStale(100)).toBe(false);
    expect(store.isStale(100 + STALE_AFTER_MS - 1)).toBe(false);
    expect(store.isStale(101 + STALE_AFTER_MS)).toBe(true);
  });

  it("stale after explicit disconnect", () => {
    const store = new ConsoleStore();
    store.handle(msg(makeConfigMessage()), 0);
    store.handle(msg(makeStateFrame()), 10);
    store.markDisconnected();
    expect(store.isStale(11)).toBe(true);
  });

  it("turns error replies into toasts", () => {
    const store = new ConsoleStore();
    store.handle(msg({ type: "error", cmd: "wrist_target", message: "bad pose" }), 0);
    const toasts = store.takeToasts();
    expect(toasts).toHaveLength(1);
    expect(toasts[0].kind).toBe("error");
    expect(toasts[0].text).toContain("wrist_target");
    expect(store.takeToasts()).toHaveLength(0);
  });

  it("emits each rejection event exactly once", () => {
    const store = new ConsoleStore();
    const event = { seq: 1, kind: "rejected", cmd: "wrist_target", message: "workspace" };
    store.handle(msg(makeStateFrame({ events: [event] })), 0);
    store.handle(msg(makeStateFrame({ events: [event] })), 50);
    const toasts = store.takeToasts();
    expect(toasts).toHaveLength(1);
    expect(toasts[0].kind).toBe("rejected");
    store.handle(
      msg(makeStateFrame({ events: [event, { ...event, seq: 2 }] })),
      100,
    );
    expect(store.takeToasts()).toHaveLength(1);
  });

  it("flags clamped acks", () => {
    const store = new ConsoleStore();
    store.handle(msg({ type: "ack", cmd: "set_dof", clamped_to: 30 }), 0);
    const toasts = store.takeToasts();
    expect(toasts).toHaveLength(1);
    expect(toasts[0].text).toContain("30");
  });
});
