// Shared test fixtures mirroring the daemon's default configuration.
import type { ConfigMessage, DofId } from "../src/protocol.js";
import { DOF_IDS } from "../src/protocol.js";

export function defaultFingers(): ConfigMessage["fingers"] {
  const identity: [number, number, number, number] = [1, 0, 0, 0];
  return {
    index: { root_pos: [27, 95, 0], root_quat: identity, proximal_mm: 45, distal_mm: 45, metacarpal_mm: 0 },
    middle: { root_pos: [9, 95, 0], root_quat: identity, proximal_mm: 45, distal_mm: 45, metacarpal_mm: 0 },
    ring: { root_pos: [-9, 95, 0], root_quat: identity, proximal_mm: 45, distal_mm: 45, metacarpal_mm: 0 },
    pinky: { root_pos: [-27, 95, 0], root_quat: identity, proximal_mm: 45, distal_mm: 45, metacarpal_mm: 0 },
    thumb: {
      root_pos: [42, 45, 0],
      root_quat: [0.9063077870366499, -0.0, -0.0, -0.42261826174069944],
      proximal_mm: 35,
      distal_mm: 35,
      metacarpal_mm: 40,
    },
  };
}

export function zeroAngles(): Record<DofId, number> {
  const angles = {} as Record<DofId, number>;
  for (const dof of DOF_IDS) angles[dof] = 0;
  return angles;
}

export function makeConfigMessage() {
  const limits = {} as Record<string, number>;
  const channel_map = {} as Record<string, number>;
  DOF_IDS.forEach((dof, i) => {
    limits[dof] = dof.includes("spread") ? 30 : dof === "thumb_cmc_oppose" ? 90 : 180;
    channel_map[dof] = i;
  });
  return {
    type: "config",
    rate_hz: 10,
    ui_rate_hz: 20,
    fingers: defaultFingers(),
    limits,
    channel_map,
    presets: ["open", "fist", "pinch", "point", "spread", "thumbs_up", "opposed"],
    workspace_low: [-350, -350, 0],
    workspace_high: [350, 350, 700],
    home_pos: [0, 0, 300],
  };
}

export function makeStateFrame(overrides: Record<string, unknown> = {}) {
  return {
    type: "state",
    t: 0,
    alive: true,
    angles: zeroAngles(),
    target_angles: zeroAngles(),
    commanded: new Array(16).fill(0),
    actual: new Array(16).fill(0),
    arm: {
      current: { pos: [0, 0, 300], quat: [1, 0, 0, 0] },
      target: { pos: [0, 0, 300], quat: [1, 0, 0, 0] },
    },
    fingertips: {
      thumb: [126.26488874308758, 115.70663706551932, 0],
      index: [27, 185, 0],
      middle: [9, 185, 0],
      ring: [-9, 185, 0],
      pinky: [-27, 185, 0],
    },
    stats: { ticks: 1, rejected: 0, replay_file: null, loop_latency_ms: 1.0 },
    events: [],
    ...overrides,
  };
}
