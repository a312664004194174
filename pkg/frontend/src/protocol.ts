// WebSocket message schema shared with the daemon. The console never
// derives pressures itself: every displayed value comes from state frames.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export type FingerName = "thumb" | "index" | "middle" | "ring" | "pinky";

export const FINGER_ORDER: FingerName[] = ["thumb", "index", "middle", "ring", "pinky"];

export const DOF_IDS = [
  "index_mcp_flex",
  "index_dippip_flex",
  "middle_mcp_flex",
  "middle_dippip_flex",
  "ring_mcp_flex",
  "ring_dippip_flex",
  "pinky_mcp_flex",
  "pinky_dippip_flex",
  "spread_1",
  "spread_2",
  "spread_3",
  "thumb_mcp_flex",
  "thumb_ip_flex",
  "thumb_mcp_spread",
  "thumb_cmc_oppose",
] as const;

export type DofId = (typeof DOF_IDS)[number];

export interface PoseJson {
  pos: Vec3;
  quat: Quat;
}

export interface FingerConfig {
  root_pos: Vec3;
  root_quat: Quat;
  proximal_mm: number;
  distal_mm: number;
  metacarpal_mm: number;
}

export interface ConfigMessage {
  type: "config";
  rate_hz: number;
  ui_rate_hz: number;
  fingers: Record<FingerName, FingerConfig>;
  limits: Record<DofId, number>;
  channel_map: Record<DofId, number>;
  presets: string[];
  workspace_low: Vec3;
  workspace_high: Vec3;
  home_pos: Vec3;
}

export interface StackEvent {
  seq: number;
  kind: string;
  cmd: string;
  message: string;
}

export interface StateFrame {
  type: "state";
  t: number;
  alive: boolean;
  angles: Record<DofId, number>;
  target_angles: Record<DofId, number>;
  commanded: number[];
  actual: number[];
  arm: { current: PoseJson; target: PoseJson };
  fingertips: Record<FingerName, Vec3>;
  stats: {
    ticks: number;
    rejected: number;
    replay_file: string | null;
    loop_latency_ms: number;
  };
  events: StackEvent[];
}

export interface AckMessage {
  type: "ack";
  cmd: string;
  clamped_to?: number;
  frames?: number;
}

export interface ErrorMessage {
  type: "error";
  cmd?: string;
  message: string;
}

export type ServerMessage = ConfigMessage | StateFrame | AckMessage | ErrorMessage;

export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new Error("server sent invalid JSON");
  }
  if (typeof raw !== "object" || raw === null || !("type" in raw)) {
    throw new Error("server message missing 'type'");
  }
  const msg = raw as { type: string };
  switch (msg.type) {
    case "config": {
      const cfg = raw as ConfigMessage;
      for (const finger of FINGER_ORDER) {
        if (!cfg.fingers?.[finger]) throw new Error(`config missing finger ${finger}`);
      }
      for (const dof of DOF_IDS) {
        if (typeof cfg.limits?.[dof] !== "number") throw new Error(`config missing limit ${dof}`);
        if (typeof cfg.channel_map?.[dof] !== "number") {
          throw new Error(`config missing channel for ${dof}`);
        }
      }
      return cfg;
    }
    case "state": {
      const st = raw as StateFrame;
      if (!Array.isArray(st.commanded) || st.commanded.length !== 16) {
        throw new Error("state frame commanded must have 16 channels");
      }
      if (!Array.isArray(st.actual) || st.actual.length !== 16) {
        throw new Error("state frame actual must have 16 channels");
      }
      for (const finger of FINGER_ORDER) {
        if (!Array.isArray(st.fingertips?.[finger]) || st.fingertips[finger].length !== 3) {
          throw new Error(`state frame missing fingertip for ${finger}`);
        }
      }
      return st;
    }
    case "ack":
      return raw as AckMessage;
    case "error":
      return raw as ErrorMessage;
    default:
      throw new Error(`unknown server message type '${msg.type}'`);
  }
}

// Client-side clamping mirrors the daemon's limits so sliders can flag
// out-of-range requests before they are sent.
export function clampAngle(
  limits: Record<DofId, number>,
  dof: DofId,
  angle: number,
): { angle: number; clamped: boolean } {
  const limit = limits[dof];
  const value = Math.min(Math.max(angle, 0), limit);
  return { angle: value, clamped: value !== angle };
}

export const encodeCommand = {
  setDof(dof: DofId, angle: number): string {
    return JSON.stringify({ type: "set_dof", dof, angle });
  },
  preset(name: string): string {
    return JSON.stringify({ type: "preset", name });
  },
  wristTarget(pose: PoseJson): string {
    return JSON.stringify({ type: "wrist_target", pose });
  },
  calibrate(): string {
    return JSON.stringify({ type: "calibrate" });
  },
  startReplay(file: string): string {
    return JSON.stringify({ type: "start_replay", file });
  },
  stop(): string {
    return JSON.stringify({ type: "stop" });
  },
};
