import { describe, expect, it } from "vitest";

import {
  DOF_IDS,
  clampAngle,
  encodeCommand,
  parseServerMessage,
} from "../src/protocol.js";
import { makeConfigMessage, makeStateFrame } from "./fixtures.js";

describe("parseServerMessage", () => {
  it("round-trips config and state frames", () => {
    const cfg = parseServerMessage(JSON.stringify(makeConfigMessage()));
    expect(cfg.type).toBe("config");
    const state = parseServerMessage(JSON.stringify(makeStateFrame()));
    expect(state.type).toBe("state");
  });

  it("rejects invalid JSON", () => {
    expect(() => parseServerMessage("{nope")).toThrow(/invalid JSON/);
  });

  it("rejects unknown message types", () => {
    expect(() => parseServerMessage(JSON.stringify({ type: "wiggle" }))).toThrow(/unknown/);
  });

  it("rejects state frames with wrong channel count", () => {
    const bad = makeStateFrame({ commanded: [0, 0, 0] });
    expect(() => parseServerMessage(JSON.stringify(bad))).toThrow(/16 channels/);
  });

  it("rejects config missing a limit", () => {
    const cfg = makeConfigMessage();
    delete (cfg.limits as Record<string, number>).spread_2;
    expect(() => parseServerMessage(JSON.stringify(cfg))).toThrow(/spread_2/);
  });

  it("passes acks and errors through", () => {
    expect(parseServerMessage('{"type":"ack","cmd":"set_dof"}').type).toBe("ack");
    expect(parseServerMessage('{"type":"error","message":"x"}').type).toBe("error");
  });
});

describe("clampAngle", () => {
  const limits = makeConfigMessage().limits as Record<string, number>;

  it("passes in-range values through", () => {
    expect(clampAngle(limits as never, "index_mcp_flex", 120)).toEqual({
      angle: 120,
      clamped: false,
    });
  });

  it("clamps and flags out-of-range values", () => {
    expect(clampAngle(limits as never, "spread_1", 45)).toEqual({ angle: 30, clamped: true });
    expect(clampAngle(limits as never, "spread_1", -5)).toEqual({ angle: 0, clamped: true });
  });
});

describe("encodeCommand", () => {
  it("produces daemon-schema commands", () => {
    expect(JSON.parse(encodeCommand.setDof("index_dippip_flex", 108.8))).toEqual({
      type: "set_dof",
      dof: "index_dippip_flex",
      angle: 108.8,
    });
    expect(JSON.parse(encodeCommand.preset("open"))).toEqual({ type: "preset", name: "open" });
    expect(JSON.parse(encodeCommand.wristTarget({ pos: [1, 2, 3], quat: [1, 0, 0, 0] }))).toEqual({
      type: "wrist_target",
      pose: { pos: [1, 2, 3], quat: [1, 0, 0, 0] },
    });
    expect(JSON.parse(encodeCommand.startReplay("a.jsonl"))).toEqual({
      type: "start_replay",
      file: "a.jsonl",
    });
    expect(JSON.parse(encodeCommand.calibrate())).toEqual({ type: "calibrate" });
    expect(JSON.parse(encodeCommand.stop())).toEqual({ type: "stop" });
  });
});
