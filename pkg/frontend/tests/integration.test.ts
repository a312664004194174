// Live acceptance against the real daemon: spawns `pneuhand serve-ui
// --with-sim` (simulators + command loop + WebSocket) and drives it the
// way the console does. Skipped when the backend isn't installed.
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { fingertip } from "../src/geometry.js";
import type { ServerMessage, StateFrame, ConfigMessage } from "../src/protocol.js";
import { encodeCommand, parseServerMessage } from "../src/protocol.js";
import { DEFAULT_VIEWPORT, markerArcPixelGap } from "../src/render.js";

const PYTHON = process.env.PNEUHAND_PYTHON ?? "python3";

function backendAvailable(): boolean {
  const probe = spawnSync(PYTHON, ["-c", "import pneuhand"], { timeout: 20000 });
  return probe.status === 0;
}

const HAVE_BACKEND = backendAvailable();

class Console {
  private ws!: WebSocket;
  private queue: ServerMessage[] = [];
  private waiters: Array<(msg: ServerMessage) => void> = [];
  config!: ConfigMessage;

  async connect(url: string): Promise<void> {
    this.ws = new WebSocket(url);
    this.ws.on("message", (data) => {
      const msg = parseServerMessage(data.toString());
      const waiter = this.waiters.shift();
      if (waiter) waiter(msg);
      else this.queue.push(msg);
    });
    await new Promise<void>((resolve, reject) => {
      this.ws.once("open", resolve);
      this.ws.once("error", reject);
    });
    const first = await this.next();
    if (first.type !== "config") throw new Error(`expected config first, got ${first.type}`);
    this.config = first;
  }

  send(text: string): void {
    this.ws.send(text);
  }

  next(timeoutMs = 3000): Promise<ServerMessage> {
    const queued = this.queue.shift();
    if (queued) return Promise.resolve(queued);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("timed out waiting for message")), timeoutMs);
      this.waiters.push((msg) => {
        clearTimeout(timer);
        resolve(msg);
      });
    });
  }

  async nextState(timeoutMs = 3000): Promise<StateFrame> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const msg = await this.next(deadline - Date.now());
      if (msg.type === "state") return msg;
    }
    throw new Error("no state frame in time");
  }

  async waitState(predicate: (s: StateFrame) => boolean, timeoutMs = 3000): Promise<StateFrame> {
    const deadline = Date.now() + timeoutMs;
    let last: StateFrame | null = null;
    while (Date.now() < deadline) {
      last = await this.nextState(deadline - Date.now());
      if (predicate(last)) return last;
    }
    throw new Error(`state condition not met; last stats=${JSON.stringify(last?.stats)}`);
  }

  close(): void {
    this.ws.close();
  }
}

describe.skipIf(!HAVE_BACKEND)("operator console against the live daemon", () => {
  let daemon: ChildProcess;
  let consoleClient: Console;
  let daemonLog = "";

  beforeAll(async () => {
    const dir = mkdtempSync(join(tmpdir(), "pneuhand-ui-"));
    const configPath = join(dir, "stack.json");
    const makeConfig = [
      "import json, socket",
      "from pneuhand.config import StackConfig, ValveEndpointConfig, ArmEndpointConfig, save_config",
      "def free():",
      "    s = socket.socket(); s.bind(('127.0.0.1', 0)); p = s.getsockname()[1]; s.close(); return p",
      "cfg = StackConfig(valve=ValveEndpointConfig(port=free()), arms=(ArmEndpointConfig(port=free()),), rate_hz=20.0, trajectory_dir=r'" +
        dir +
        "')",
      `save_config(cfg, r'${configPath}')`,
    ].join("\n");
    const setup = spawnSync(PYTHON, ["-c", makeConfig], { timeout: 30000 });
    if (setup.status !== 0) throw new Error(`config setup failed: ${setup.stderr}`);

    daemon = spawn(PYTHON, [
      "-u",
      "-m",
      "pneuhand",
      "serve-ui",
      "--with-sim",
      "--config",
      configPath,
      "--port",
      "0",
    ]);
    const url = await new Promise<string>((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`daemon did not announce its endpoint; log: ${daemonLog}`)),
        20000,
      );
      daemon.stdout!.on("data", (chunk) => {
        daemonLog += chunk.toString();
        const match = daemonLog.match(/ws:\/\/[\d.]+:(\d+)\/ws/);
        if (match) {
          clearTimeout(timer);
          resolve(match[0]);
        }
      });
      daemon.stderr!.on("data", (chunk) => (daemonLog += chunk.toString()));
      daemon.on("exit", (code) =>
        reject(new Error(`daemon exited early (${code}); log: ${daemonLog}`)),
      );
    });
    consoleClient = new Console();
    await consoleClient.connect(url);
  }, 40000);

  afterAll(async () => {
    consoleClient?.close();
    if (daemon && daemon.exitCode === null) {
      daemon.kill("SIGINT");
      await new Promise((resolve) => daemon.once("exit", resolve));
    }
  });

  it("streams state frames promptly after the config message", async () => {
    const state = await consoleClient.nextState(1000);
    expect(state.alive).toBe(true);
    expect(state.commanded).toHaveLength(16);
  });

  it("renders five straight fingers in the zero state", async () => {
    const state = await consoleClient.waitState((s) => s.commanded.every((v) => v === 0));
    const cfg = consoleClient.config;
    for (const finger of ["thumb", "index", "middle", "ring", "pinky"] as const) {
      const expected = fingertip(finger, cfg.fingers[finger], state.angles);
      for (let axis = 0; axis < 3; axis++) {
        expect(state.fingertips[finger][axis]).toBeCloseTo(expected[axis], 6);
      }
    }
    expect(markerArcPixelGap(cfg, state, DEFAULT_VIEWPORT)).toBeLessThan(1.0);
    // straight index: tip sits one full finger length distal of the root
    expect(state.fingertips.index[1]).toBeCloseTo(185, 6);
    expect(Math.abs(state.fingertips.index[2])).toBeLessThan(1e-6);
  });

  it("slider to 108.8 deg drives the channel-1 gauge to 400 +- 2 mbar within 1 s", async () => {
    const started = Date.now();
    consoleClient.send(encodeCommand.setDof("index_dippip_flex", 108.8));
    const state = await consoleClient.waitState(
      (s) => Math.abs(s.actual[1] - 400) <= 2,
      2000,
    );
    expect(Date.now() - started).toBeLessThan(1000);
    expect(state.commanded[1]).toBe(400);
    consoleClient.send(encodeCommand.setDof("index_dippip_flex", 0));
    await consoleClient.waitState((s) => s.actual[1] <= 2, 2000);
  });

  it("rejects out-of-workspace wrist drags without moving the target", async () => {
    const before = await consoleClient.nextState();
    const target = before.arm.target.pos;
    consoleClient.send(
      encodeCommand.wristTarget({ pos: [0, 0, 9000], quat: [1, 0, 0, 0] }),
    );
    const state = await consoleClient.waitState((s) =>
      s.events.some((e) => e.kind === "rejected" && e.message === "workspace"),
    );
    for (let axis = 0; axis < 3; axis++) {
      expect(state.arm.target.pos[axis]).toBeCloseTo(target[axis], 6);
    }
  });

  it("accepts in-workspace wrist targets and converges", async () => {
    consoleClient.send(
      encodeCommand.wristTarget({ pos: [40, 0, 0], quat: [1, 0, 0, 0] }),
    );
    await consoleClient.waitState(
      (s) => Math.abs(s.arm.current.pos[0] - 40) < 1.0,
      3000,
    );
    consoleClient.send(encodeCommand.wristTarget({ pos: [0, 0, 0], quat: [1, 0, 0, 0] }));
    await consoleClient.waitState((s) => Math.abs(s.arm.current.pos[0]) < 1.0, 3000);
  });

  it("answers malformed commands with error replies", async () => {
    consoleClient.send('{"type": "wiggle"}');
    const deadline = Date.now() + 2000;
    while (Date.now() < deadline) {
      const msg = await consoleClient.next(deadline - Date.now());
      if (msg.type === "error") {
        expect(msg.message).toContain("wiggle");
        return;
      }
    }
    throw new Error("no error reply");
  });
});
