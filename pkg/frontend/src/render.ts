// 2.5D hand rendering: a cabinet-style oblique projection of the palm
// frame. At rest (everything in the palm plane) this is a plain top view,
// so the spread DoFs read as an azimuth fan; flexion pulls the arcs
// toward the viewer along the oblique depth axis.

import { fingerPolyline } from "./geometry.js";
import type { ConfigMessage, FingerName, StateFrame, Vec3 } from "./protocol.js";
import { FINGER_ORDER } from "./protocol.js";

export interface Viewport {
  scalePxPerMm: number;
  originXPx: number; // palm-frame origin on the canvas
  originYPx: number;
}

export const DEFAULT_VIEWPORT: Viewport = { scalePxPerMm: 2.2, originXPx: 250, originYPx: 430 };

const DEPTH_X = 0.35; // oblique share of -z mapped into screen x
const DEPTH_Y = 0.35; // and into screen y

export function project(p: Vec3, vp: Viewport): [number, number] {
  const sx = vp.originXPx + vp.scalePxPerMm * (p[0] + DEPTH_X * p[2]);
  const sy = vp.originYPx - vp.scalePxPerMm * (p[1] + DEPTH_Y * p[2]);
  return [sx, sy];
}

// Largest pixel gap between each drawn arc endpoint and the broadcast
// fingertip marker. The daemon derives both from the same angles, so this
// stays at float-noise level; the render tests pin it under one pixel.
export function markerArcPixelGap(config: ConfigMessage, state: StateFrame, vp: Viewport): number {
  let worst = 0;
  for (const finger of FINGER_ORDER) {
    const line = fingerPolyline(finger, config.fingers[finger], state.angles);
    const [ax, ay] = project(line[line.length - 1], vp);
    const [mx, my] = project(state.fingertips[finger], vp);
    worst = Math.max(worst, Math.hypot(ax - mx, ay - my));
  }
  return worst;
}

const FINGER_COLORS: Record<FingerName, string> = {
  thumb: "#e4633a",
  index: "#3a86e4",
  middle: "#3ab8e4",
  ring: "#41d0a5",
  pinky: "#9a7be4",
};

function tracePolyline(ctx: CanvasRenderingContext2D, points: Vec3[], vp: Viewport): void {
  ctx.beginPath();
  points.forEach((p, i) => {
    const [sx, sy] = project(p, vp);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

export function drawHand(
  ctx: CanvasRenderingContext2D,
  config: ConfigMessage,
  state: StateFrame,
  vp: Viewport,
): void {
  // palm: wrist point fanning out to the finger roots
  const wrist: Vec3 = [8, -5, 0];
  ctx.strokeStyle = "#5a6472";
  ctx.lineWidth = 1.5;
  for (const finger of FINGER_ORDER) {
    tracePolyline(ctx, [wrist, config.fingers[finger].root_pos], vp);
  }

  for (const finger of FINGER_ORDER) {
    const line = fingerPolyline(finger, config.fingers[finger], state.angles);
    ctx.strokeStyle = FINGER_COLORS[finger];
    ctx.lineWidth = 3;
    tracePolyline(ctx, line, vp);

    const [mx, my] = project(state.fingertips[finger], vp);
    ctx.fillStyle = FINGER_COLORS[finger];
    ctx.beginPath();
    ctx.arc(mx, my, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

// Arm panel: top view of the workspace (x across, y up the screen; the
// arm frame is z-up so height rides the separate slider). Returns the
// mm-per-px mapping so the drag widget can invert pointer positions.
export interface ArmView {
  toPx(x: number, y: number): [number, number];
  toMm(px: number, py: number): [number, number];
}

export function armView(config: ConfigMessage, widthPx: number, heightPx: number): ArmView {
  const [lx, ly] = config.workspace_low;
  const [hx, hy] = config.workspace_high;
  const pad = 18;
  const scale = Math.min((widthPx - 2 * pad) / (hx - lx), (heightPx - 2 * pad) / (hy - ly));
  return {
    toPx: (x, y) => [pad + (x - lx) * scale, heightPx - pad - (y - ly) * scale],
    toMm: (px, py) => [lx + (px - pad) / scale, ly + (heightPx - pad - py) / scale],
  };
}

export function drawArm(
  ctx: CanvasRenderingContext2D,
  config: ConfigMessage,
  state: StateFrame,
  widthPx: number,
  heightPx: number,
): void {
  const view = armView(config, widthPx, heightPx);
  const [lx, ly] = config.workspace_low;
  const [hx, hy] = config.workspace_high;

  ctx.strokeStyle = "#5a6472";
  ctx.lineWidth = 1;
  const [bx0, by0] = view.toPx(lx, ly);
  const [bx1, by1] = view.toPx(hx, hy);
  ctx.strokeRect(Math.min(bx0, bx1), Math.min(by0, by1), Math.abs(bx1 - bx0), Math.abs(by1 - by0));

  const target = state.arm.target.pos;
  const current = state.arm.current.pos;
  const [tx, ty] = view.toPx(target[0], target[1]);
  ctx.strokeStyle = "#e4b13a";
  ctx.lineWidth = 2;
  ctx.strokeRect(tx - 5, ty - 5, 10, 10);
  const [cx, cy] = view.toPx(current[0], current[1]);
  ctx.fillStyle = "#3ae471";
  ctx.beginPath();
  ctx.arc(cx, cy, 5, 0, 2 * Math.PI);
  ctx.fill();
}
