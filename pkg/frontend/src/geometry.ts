// Constant-curvature arc math mirroring the daemon's hand kinematics.
// Only used for the cosmetic finger arcs; fingertip markers always come
// from the broadcast positions, and the tests pin both to the same
// numbers so the arcs end exactly on the markers.

import type { DofId, FingerConfig, FingerName, Quat, Vec3 } from "./protocol.js";

export function quatFromAxisAngleDeg(axis: Vec3, angleDeg: number): Quat {
  const norm = Math.hypot(axis[0], axis[1], axis[2]);
  const half = (angleDeg * Math.PI) / 180 / 2;
  const s = Math.sin(half) / norm;
  return [Math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s];
}

export function quatMul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const ux = y * v[2] - z * v[1];
  const uy = z * v[0] - x * v[2];
  const uz = x * v[1] - y * v[0];
  const cx = y * uz - z * uy;
  const cy = z * ux - x * uz;
  const cz = x * uy - y * ux;
  return [v[0] + 2 * (w * ux + cx), v[1] + 2 * (w * uy + cy), v[2] + 2 * (w * uz + cz)];
}

// In-plane displacement (lateral, along) of one constant-curvature
// segment of the given length bent by bendDeg; 0 degrees is straight.
export function arcDisplacement(lengthMm: number, bendDeg: number): [number, number] {
  const phi = (bendDeg * Math.PI) / 180;
  if (phi === 0) return [0, lengthMm];
  const radius = lengthMm / phi;
  return [radius * (1 - Math.cos(phi)), radius * Math.sin(phi)];
}

// Chain segments in the bend plane starting at the origin heading +along;
// returns the endpoint of each (sub)segment.
export function arcChain(segments: Array<[number, number]>): Array<[number, number]> {
  let x = 0;
  let y = 0;
  let heading = 0;
  const points: Array<[number, number]> = [];
  for (const [lengthMm, bendDeg] of segments) {
    const [lat, alo] = arcDisplacement(lengthMm, bendDeg);
    const c = Math.cos(heading);
    const s = Math.sin(heading);
    x += lat * c + alo * s;
    y += -lat * s + alo * c;
    heading += (bendDeg * Math.PI) / 180;
    points.push([x, y]);
  }
  return points;
}

export const FINGER_FLEX_DOFS: Record<FingerName, [DofId, DofId]> = {
  thumb: ["thumb_mcp_flex", "thumb_ip_flex"],
  index: ["index_mcp_flex", "index_dippip_flex"],
  middle: ["middle_mcp_flex", "middle_dippip_flex"],
  ring: ["ring_mcp_flex", "ring_dippip_flex"],
  pinky: ["pinky_mcp_flex", "pinky_dippip_flex"],
};

export const FINGER_SPREAD_DOFS: Partial<Record<FingerName, [DofId, number]>> = {
  index: ["spread_1", -1],
  ring: ["spread_2", 1],
  pinky: ["spread_3", 1],
  thumb: ["thumb_mcp_spread", -1],
};

// Palm-frame points along a finger: root, metacarpal end (thumb), then
// samples along each bending segment. Mirrors the daemon's chain: the
// thumb swings about the palm's distal axis by the opposition angle, every
// spread rotates about the local palm normal, flexion curls toward -z.
export function fingerPolyline(
  finger: FingerName,
  cfg: FingerConfig,
  angles: Record<DofId, number>,
  samplesPerSegment = 8,
): Vec3[] {
  const [proxDof, distDof] = FINGER_FLEX_DOFS[finger];
  const segments: Array<[number, number]> = [];
  for (const [lengthMm, bendDeg] of [
    [cfg.proximal_mm, angles[proxDof]],
    [cfg.distal_mm, angles[distDof]],
  ] as Array<[number, number]>) {
    const n = Math.max(1, samplesPerSegment);
    for (let i = 0; i < n; i++) segments.push([lengthMm / n, bendDeg / n]);
  }
  const chain = arcChain(segments);

  let q: Quat = cfg.root_quat;
  if (finger === "thumb") {
    q = quatMul(quatFromAxisAngleDeg([0, 1, 0], angles.thumb_cmc_oppose), q);
  }
  const spread = FINGER_SPREAD_DOFS[finger];
  if (spread) {
    const [dof, sign] = spread;
    q = quatMul(q, quatFromAxisAngleDeg([0, 0, 1], sign * angles[dof]));
  }

  const root = cfg.root_pos;
  const meta = cfg.metacarpal_mm;
  const points: Vec3[] = [root];
  const add = (local: Vec3) => {
    const r = quatRotate(q, local);
    points.push([root[0] + r[0], root[1] + r[1], root[2] + r[2]]);
  };
  if (meta > 0) add([0, meta, 0]);
  for (const [lat, alo] of chain) add([0, meta + alo, -lat]);
  return points;
}

export function fingertip(finger: FingerName, cfg: FingerConfig, angles: Record<DofId, number>): Vec3 {
  const line = fingerPolyline(finger, cfg, angles, 1);
  return line[line.length - 1];
}

export function distance(a: Vec3, b: Vec3): number {
  return Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}
