// Operator console wiring: WebSocket in, commands out, canvases redrawn
// on every animation frame from the latest broadcast state.

import { quatFromAxisAngleDeg } from "./geometry.js";
import { gaugeRows } from "./gauges.js";
import type { DofId, PoseJson } from "./protocol.js";
import { DOF_IDS, clampAngle, encodeCommand, parseServerMessage } from "./protocol.js";
import { DEFAULT_VIEWPORT, armView, drawArm, drawHand } from "./render.js";
import { ConsoleStore } from "./store.js";

const WRIST_SEND_MIN_INTERVAL_MS = 33; // ~30 Hz; the daemon keeps only the freshest

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const store = new ConsoleStore();
const wsUrl = `ws://${location.host || "127.0.0.1:8765"}/ws`;
let ws: WebSocket | null = null;

const wrist = { x: 0, y: 0, z: 0, yawDeg: 0 };
let lastWristSendMs = 0;
let wristDirty = false;

function send(text: string): void {
  if (ws && ws.readyState === WebSocket.OPEN) ws.send(text);
}

function sendWristTarget(nowMs: number, force = false): void {
  if (!force && nowMs - lastWristSendMs < WRIST_SEND_MIN_INTERVAL_MS) {
    wristDirty = true;
    return;
  }
  lastWristSendMs = nowMs;
  wristDirty = false;
  const pose: PoseJson = {
    pos: [wrist.x, wrist.y, wrist.z],
    quat: quatFromAxisAngleDeg([0, 0, 1], wrist.yawDeg),
  };
  send(encodeCommand.wristTarget(pose));
}

function buildSliders(): void {
  const container = el<HTMLDivElement>("sliders");
  container.innerHTML = "";
  const limits = store.config!.limits;
  for (const dof of DOF_IDS) {
    const row = document.createElement("div");
    row.className = "slider-row";
    const label = document.createElement("label");
    label.textContent = dof;
    const input = document.createElement("input");
    input.type = "range";
    input.min = "0";
    input.max = String(limits[dof]);
    input.step = "0.1";
    input.value = "0";
    input.id = `slider-${dof}`;
    const value = document.createElement("span");
    value.textContent = "0.0";
    input.addEventListener("input", () => {
      const requested = Number(input.value);
      const { angle, clamped } = clampAngle(limits, dof, requested);
      value.textContent = angle.toFixed(1) + (clamped ? " (clamped)" : "");
      send(encodeCommand.setDof(dof, angle));
    });
    row.append(label, input, value);
    container.append(row);
  }
}

function buildPresets(): void {
  const container = el<HTMLDivElement>("presets");
  container.innerHTML = "";
  for (const name of store.config!.presets) {
    const button = document.createElement("button");
    button.textContent = name;
    button.addEventListener("click", () => {
      send(encodeCommand.preset(name));
      syncSlidersSoon();
    });
    container.append(button);
  }
}

let syncPending = false;
function syncSlidersSoon(): void {
  // presets change target angles server-side; reflect them on the sliders
  syncPending = true;
}

function syncSliders(): void {
  if (!syncPending || !store.state) return;
  syncPending = false;
  for (const dof of DOF_IDS) {
    const input = document.getElementById(`slider-${dof}`) as HTMLInputElement | null;
    if (input) input.value = String(store.state.target_angles[dof] ?? 0);
  }
}

function renderGauges(): void {
  if (!store.config || !store.state) return;
  const container = el<HTMLDivElement>("gauges");
  if (container.childElementCount === 0) {
    for (let channel = 0; channel < 16; channel++) {
      const row = document.createElement("div");
      row.className = "gauge-row";
      row.innerHTML =
        `<span class="gauge-label" id="gauge-label-${channel}"></span>` +
        `<div class="gauge-bar"><div class="gauge-fill commanded" id="gauge-cmd-${channel}"></div>` +
        `<div class="gauge-fill actual" id="gauge-act-${channel}"></div></div>` +
        `<span class="gauge-value" id="gauge-val-${channel}"></span>`;
      container.append(row);
    }
  }
  for (const row of gaugeRows(store.config, store.state)) {
    el<HTMLSpanElement>(`gauge-label-${row.channel}`).textContent =
      `${row.channel} ${row.dof ?? "(unused)"}`;
    el<HTMLDivElement>(`gauge-cmd-${row.channel}`).style.width =
      `${(row.commandedFraction * 100).toFixed(2)}%`;
    el<HTMLDivElement>(`gauge-act-${row.channel}`).style.width =
      `${(row.actualFraction * 100).toFixed(2)}%`;
    el<HTMLSpanElement>(`gauge-val-${row.channel}`).textContent =
      `${row.actual}/${row.commanded} mbar`;
  }
}

function renderToasts(): void {
  const container = el<HTMLDivElement>("toasts");
  for (const toast of store.takeToasts()) {
    const node = document.createElement("div");
    node.className = `toast ${toast.kind}`;
    node.textContent = toast.text;
    container.append(node);
    setTimeout(() => node.remove(), 4000);
  }
}

function renderStats(): void {
  if (!store.state) return;
  const stats = store.state.stats;
  el<HTMLDivElement>("stats").textContent =
    `ticks ${stats.ticks} | rejected ${stats.rejected} | ` +
    `loop ${stats.loop_latency_ms.toFixed(1)} ms` +
    (stats.replay_file ? ` | replaying ${stats.replay_file}` : "");
}

function frame(): void {
  const now = performance.now();
  el<HTMLDivElement>("banner").style.display = store.isStale(now) ? "block" : "none";
  if (wristDirty) sendWristTarget(now);
  if (store.config && store.state) {
    const handCanvas = el<HTMLCanvasElement>("hand-canvas");
    const handCtx = handCanvas.getContext("2d")!;
    handCtx.clearRect(0, 0, handCanvas.width, handCanvas.height);
    drawHand(handCtx, store.config, store.state, DEFAULT_VIEWPORT);

    const armCanvas = el<HTMLCanvasElement>("arm-canvas");
    const armCtx = armCanvas.getContext("2d")!;
    armCtx.clearRect(0, 0, armCanvas.width, armCanvas.height);
    drawArm(armCtx, store.config, store.state, armCanvas.width, armCanvas.height);

    renderGauges();
    renderStats();
    syncSliders();
  }
  renderToasts();
  requestAnimationFrame(frame);
}

function wireWristWidget(): void {
  const canvas = el<HTMLCanvasElement>("arm-canvas");
  let dragging = false;
  const applyPointer = (event: PointerEvent) => {
    if (!store.config) return;
    const rect = canvas.getBoundingClientRect();
    const view = armView(store.config, canvas.width, canvas.height);
    const [x, y] = view.toMm(event.clientX - rect.left, event.clientY - rect.top);
    // widget speaks operator-frame offsets around the calibrated start
    wrist.x = x - store.config.home_pos[0];
    wrist.y = y - store.config.home_pos[1];
    sendWristTarget(performance.now());
  };
  canvas.addEventListener("pointerdown", (event) => {
    dragging = true;
    canvas.setPointerCapture(event.pointerId);
    applyPointer(event);
  });
  canvas.addEventListener("pointermove", (event) => {
    if (dragging) applyPointer(event);
  });
  canvas.addEventListener("pointerup", () => {
    dragging = false;
  });

  el<HTMLInputElement>("wrist-height").addEventListener("input", (event) => {
    wrist.z = Number((event.target as HTMLInputElement).value);
    sendWristTarget(performance.now());
  });
  el<HTMLInputElement>("wrist-yaw").addEventListener("input", (event) => {
    wrist.yawDeg = Number((event.target as HTMLInputElement).value);
    sendWristTarget(performance.now());
  });
  el<HTMLButtonElement>("calibrate").addEventListener("click", () => {
    send(encodeCommand.calibrate());
  });
}

function wireReplay(): void {
  el<HTMLButtonElement>("replay-start").addEventListener("click", () => {
    const file = el<HTMLInputElement>("replay-file").value.trim();
    if (file) send(encodeCommand.startReplay(file));
  });
  el<HTMLButtonElement>("replay-stop").addEventListener("click", () => {
    send(encodeCommand.stop());
  });
}

function connect(): void {
  ws = new WebSocket(wsUrl);
  ws.onmessage = (event: MessageEvent) => {
    const hadConfig = store.config !== null;
    try {
      store.handle(parseServerMessage(String(event.data)), performance.now());
    } catch (err) {
      console.error("bad server message:", err);
      return;
    }
    if (!hadConfig && store.config) {
      buildSliders();
      buildPresets();
    }
  };
  ws.onclose = () => {
    store.markDisconnected();
    setTimeout(connect, 1000);
  };
  ws.onerror = () => ws?.close();
}

connect();
wireWristWidget();
wireReplay();
requestAnimationFrame(frame);
