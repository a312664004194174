"""Operator-console backend: a command loop driving the simulators from UI
input, snapshotting stack state, and a WebSocket endpoint broadcasting it.

WebSocket protocol (JSON messages, `type` field):
  server -> client, once on connect:
    {"type": "config", "rate_hz", "ui_rate_hz", "fingers", "limits",
     "channel_map", "workspace_low", "workspace_high", "home_pos"}
  server -> client, streamed at 20 Hz:
    {"type": "state", "t", "angles", "commanded", "actual",
     "arm": {"current": {...}, "target": {...}}, "fingertips", "stats",
     "events": [{"seq", "kind", "cmd", "message"}, ...]}
  client -> server commands:
    {"type": "set_dof", "dof", "angle"} | {"type": "preset", "name"}
    | {"type": "wrist_target", "pose": {"pos": [3], "quat": [4]}}
    | {"type": "calibrate"} | {"type": "start_replay", "file"}
    | {"type": "stop"}
  server replies "ack" or "error" per command; asynchronous outcomes
  (workspace rejection) surface as events inside state frames.
"""
from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .arm import ArmClient, ArmCommandError, ArmServer, ArmTransportError
from .config import StackConfig
from .hand import (
    DofId,
    HandState,
    N_CHANNELS,
    clamp_to_limits,
    fingertip_positions,
    hand_to_pressures,
    preset_pose,
    pressures_to_hand,
    PRESET_NAMES,
)
from .teleop import LatestMailbox, RateScheduler, calibrate, retarget_pose
from .trajectory import load_trajectory
from .transforms import Pose
from .valves import ValveClient, ValveServer, ValveTransportError

UI_BROADCAST_HZ = 20.0


def _pose_to_json(pose: Pose) -> dict:
    return {
        "pos": [float(v) for v in pose.position],
        "quat": [float(v) for v in pose.quat],
    }


def _pose_from_json(obj) -> Pose:
    if not isinstance(obj, dict) or "pos" not in obj or "quat" not in obj:
        raise ValueError("pose must be an object with 'pos' and 'quat'")
    pos = obj["pos"]
    quat = obj["quat"]
    if not isinstance(pos, list) or len(pos) != 3:
        raise ValueError("pose 'pos' must be a 3-element list")
    if not isinstance(quat, list) or len(quat) != 4:
        raise ValueError("pose 'quat' must be a 4-element list")
    values = [float(v) for v in pos + quat]
    if not all(math.isfinite(v) for v in values):
        raise ValueError("pose fields must be finite")
    return Pose(np.array(values[:3]), np.array(values[3:]))


class StackDaemon:
    """Owns the valve/arm clients and all mutable stack state.

    UI commands are validated on the caller's thread but applied only by
    the loop thread; continuous wrist targets go through a freshest-wins
    mailbox, discrete commands through an ordered queue.
    """

    def __init__(self, config: StackConfig, unit: int = 0):
        if not 0 <= unit < len(config.arms):
            raise ValueError(f"unit {unit} not in configured arms")
        self.config = config
        self.geom = config.geometry()
        self.unit = unit
        self._wrist_box = LatestMailbox()
        self._commands: list = []
        self._cmd_lock = threading.Lock()
        self._snapshot: dict = {}
        self._snap_lock = threading.Lock()
        self._events: list[dict] = []
        self._event_seq = 0
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._replay_frames: list | None = None
        self._replay_index = 0
        self._replay_file: str | None = None
        self._ticks = 0
        self._rejected = 0

    # lifecycle

    def start(self) -> "StackDaemon":
        arm_cfg = self.config.arms[self.unit]
        self._valve = ValveClient(self.config.valve.host, self.config.valve.port)
        self._arm = ArmClient(arm_cfg.host, arm_cfg.port)
        current = self._arm.get()
        self._hand_target = HandState.zero()
        self._arm_target = current
        self._operator_wrist = Pose.identity()
        self._alignment = calibrate(Pose.identity(), current)
        self._publish(current, current, [0] * N_CHANNELS, [0] * N_CHANNELS, 0.0)
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None
        for client in ("_valve", "_arm"):
            if hasattr(self, client):
                getattr(self, client).close()

    def __enter__(self) -> "StackDaemon":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    # command ingress (any thread)

    def submit(self, message: str | dict) -> dict:
        """Validate one UI command; returns the ack/error reply to send."""
        if isinstance(message, str):
            try:
                message = json.loads(message)
            except json.JSONDecodeError as exc:
                return {"type": "error", "message": f"invalid JSON: {exc.msg}"}
        if not isinstance(message, dict) or "type" not in message:
            return {"type": "error", "message": "command must be an object with 'type'"}
        kind = message["type"]
        try:
            if kind == "set_dof":
                dof = DofId(message["dof"])
                angle = float(message["angle"])
                if not math.isfinite(angle):
                    raise ValueError("angle must be finite")
                limit = self.geom.limits[dof]
                clamped = min(max(angle, 0.0), limit)
                self._enqueue(("set_dof", dof, clamped))
                reply = {"type": "ack", "cmd": "set_dof"}
                if clamped != angle:
                    reply["clamped_to"] = clamped
                return reply
            if kind == "preset":
                name = message["name"]
                if name not in PRESET_NAMES:
                    raise ValueError(f"unknown preset {name!r}; valid: {', '.join(PRESET_NAMES)}")
                self._enqueue(("preset", name))
                return {"type": "ack", "cmd": "preset"}
            if kind == "wrist_target":
                pose = _pose_from_json(message.get("pose"))
                self._wrist_box.put(pose)
                return {"type": "ack", "cmd": "wrist_target"}
            if kind == "calibrate":
                self._enqueue(("calibrate",))
                return {"type": "ack", "cmd": "calibrate"}
            if kind == "start_replay":
                name = message.get("file")
                path = self._resolve_trajectory(name)
                frames = load_trajectory(path)
                if not frames:
                    raise ValueError(f"trajectory {name!r} is empty")
                self._enqueue(("start_replay", name, frames))
                return {"type": "ack", "cmd": "start_replay", "frames": len(frames)}
            if kind == "stop":
                self._enqueue(("stop_replay",))
                return {"type": "ack", "cmd": "stop"}
        except (KeyError, TypeError, ValueError) as exc:
            return {"type": "error", "cmd": str(kind), "message": str(exc)}
        return {"type": "error", "message": f"unknown command type {kind!r}"}

    def snapshot(self) -> dict:
        with self._snap_lock:
            return dict(self._snapshot)

    def config_message(self) -> dict:
        arm_cfg = self.config.arms[self.unit]
        return {
            "type": "config",
            "rate_hz": self.config.rate_hz,
            "ui_rate_hz": UI_BROADCAST_HZ,
            "fingers": {
                name: {
                    "root_pos": [float(v) for v in fg.root.position],
                    "root_quat": [float(v) for v in fg.root.quat],
                    "proximal_mm": fg.proximal_mm,
                    "distal_mm": fg.distal_mm,
                    "metacarpal_mm": fg.metacarpal_mm,
                }
                for name, fg in self.geom.fingers.items()
            },
            "limits": {d.value: self.geom.limits[d] for d in DofId},
            "channel_map": {d.value: self.geom.channel_map[d] for d in DofId},
            "presets": list(PRESET_NAMES),
            "workspace_low": list(arm_cfg.workspace_low),
            "workspace_high": list(arm_cfg.workspace_high),
            "home_pos": list(arm_cfg.home_pos),
        }

    # loop internals (loop thread only)

    def _enqueue(self, item) -> None:
        with self._cmd_lock:
            self._commands.append(item)

    def _drain_commands(self) -> list:
        with self._cmd_lock:
            items, self._commands = self._commands, []
            return items

    def _push_event(self, kind: str, cmd: str, message: str) -> None:
        self._event_seq += 1
        self._events.append({"seq": self._event_seq, "kind": kind, "cmd": cmd, "message": message})
        del self._events[:-10]

    def _resolve_trajectory(self, name) -> Path:
        if not isinstance(name, str) or not name:
            raise ValueError("start_replay needs a 'file' name")
        if "/" in name or "\\" in name or name.startswith("."):
            raise ValueError("trajectory file must be a bare name inside the trajectory dir")
        path = Path(self.config.trajectory_dir) / name
        if not path.is_file():
            raise ValueError(f"trajectory {name!r} not found in {self.config.trajectory_dir}")
        return path

    def _apply_command(self, item) -> None:
        kind = item[0]
        if kind == "set_dof":
            _, dof, angle = item
            self._hand_target = self._hand_target.replace({dof: angle})
        elif kind == "preset":
            self._hand_target = preset_pose(item[1], self.geom)
        elif kind == "calibrate":
            self._alignment = calibrate(self._operator_wrist, self._last_current)
            self._push_event("info", "calibrate", "frame alignment captured")
        elif kind == "start_replay":
            _, name, frames = item
            self._replay_frames = frames
            self._replay_index = 0
            self._replay_file = name
            self._replay_t0 = time.perf_counter()
        elif kind == "stop_replay":
            self._replay_frames = None
            self._replay_file = None

    def _replay_tick(self) -> None:
        """Feed due replay frames through the same freshest-wins path."""
        frames = self._replay_frames
        if frames is None:
            return
        elapsed = time.perf_counter() - self._replay_t0
        base_t = frames[0].t_s
        due = None
        while self._replay_index < len(frames) and frames[self._replay_index].t_s - base_t <= elapsed:
            due = frames[self._replay_index]
            self._replay_index += 1
        if due is not None:
            clamped, _ = clamp_to_limits(due.hand, self.geom)
            self._hand_target = clamped
            self._operator_wrist = due.wrist
            self._wrist_box.put(due.wrist)
        if self._replay_index >= len(frames):
            self._replay_frames = None
            self._replay_file = None
            self._push_event("info", "start_replay", "replay finished")

    def _loop(self) -> None:
        scheduler = RateScheduler(self.config.rate_hz)
        self._last_current = self._arm_target
        while not self._stop.is_set():
            tick_started = time.perf_counter()
            try:
                for item in self._drain_commands():
                    self._apply_command(item)
                self._replay_tick()
                wrist = self._wrist_box.take()
                if wrist is not None:
                    self._operator_wrist = wrist
                    candidate = retarget_pose(self._alignment, wrist)
                    try:
                        self._arm.move(candidate)
                        self._arm_target = candidate
                    except ArmCommandError as exc:
                        self._rejected += 1
                        self._push_event("rejected", "wrist_target", exc.reason)
                else:
                    try:
                        self._arm.move(self._arm_target)
                    except ArmCommandError as exc:  # pragma: no cover - target was accepted before
                        self._push_event("rejected", "wrist_target", exc.reason)
                commanded = hand_to_pressures(self._hand_target, self.geom)
                self._valve.write_pressures(commanded)
                actual = self._valve.read_actual()
                current = self._arm.get()
                self._last_current = current
                self._ticks += 1
                latency_ms = (time.perf_counter() - tick_started) * 1000.0
                self._publish(current, self._arm_target, list(commanded), actual, latency_ms)
            except (ValveTransportError, ArmTransportError) as exc:
                self._push_event("fatal", "loop", str(exc))
                with self._snap_lock:
                    self._snapshot = {**self._snapshot, "events": list(self._events), "alive": False}
                return
            scheduler.sleep()

    def _publish(self, current: Pose, target: Pose, commanded, actual, latency_ms: float) -> None:
        live_angles = pressures_to_hand(np.array(actual, dtype=float), self.geom)
        tips = fingertip_positions(live_angles, self.geom)
        state = {
            "type": "state",
            "t": time.time(),
            "alive": True,
            "angles": {d.value: live_angles[d] for d in DofId},
            "target_angles": self._hand_target.as_dict(),
            "commanded": [int(round(v)) for v in commanded],
            "actual": [int(round(v)) for v in actual],
            "arm": {"current": _pose_to_json(current), "target": _pose_to_json(target)},
            "fingertips": {name: [float(v) for v in tip] for name, tip in tips.items()},
            "stats": {
                "ticks": self._ticks,
                "rejected": self._rejected,
                "replay_file": self._replay_file,
                "loop_latency_ms": latency_ms,
            },
            "events": list(self._events),
        }
        with self._snap_lock:
            self._snapshot = state


def build_app(daemon: StackDaemon, static_dir: str | Path | None = None):
    """FastAPI app exposing /ws plus optional static frontend files."""
    app = FastAPI(title="pneuhand operator console")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        import asyncio

        await ws.accept()
        send_lock = asyncio.Lock()

        async def send(payload: dict):
            async with send_lock:
                await ws.send_json(payload)

        await send(daemon.config_message())

        async def broadcast():
            period = 1.0 / UI_BROADCAST_HZ
            while True:
                snap = daemon.snapshot()
                if snap:
                    await send(snap)
                await asyncio.sleep(period)

        sender = asyncio.create_task(broadcast())
        try:
            while True:
                text = await ws.receive_text()
                await send(daemon.submit(text))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="frontend")
    return app


@dataclass
class UiStack:
    """Everything serve-ui started, with one stop() for clean shutdown."""

    daemon: StackDaemon
    server: object
    thread: threading.Thread
    port: int
    sims: tuple = ()

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=5.0)
        self.daemon.stop()
        for sim in self.sims:
            sim.stop()


def serve_ui(
    config: StackConfig,
    with_sim: bool = False,
    static_dir: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int | None = None,
) -> UiStack:
    """Start (optionally) simulators, the daemon loop, and the WS endpoint."""
    import uvicorn

    sims: tuple = ()
    if with_sim:
        valve = ValveServer(
            config.valve.host, config.valve.port, config.valve.tau_s, config.valve.tick_hz
        ).start()
        arm_cfg = config.arms[0]
        arm = ArmServer(
            arm_cfg.host,
            arm_cfg.port,
            arm_cfg.home_pose(),
            v_max_mm_s=arm_cfg.v_max_mm_s,
            w_max_deg_s=arm_cfg.w_max_deg_s,
            workspace=arm_cfg.workspace(),
            step_hz=arm_cfg.step_hz,
        ).start()
        sims = (valve, arm)
    try:
        daemon = StackDaemon(config).start()
    except Exception:
        for sim in sims:
            sim.stop()
        raise
    app = build_app(daemon, static_dir)
    ui_port = config.ui_port if port is None else port
    server = uvicorn.Server(uvicorn.Config(app, host=host, port=ui_port, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 5.0
    while not server.started and time.time() < deadline:
        if not thread.is_alive():
            daemon.stop()
            for sim in sims:
                sim.stop()
            raise RuntimeError(f"UI server failed to start on {host}:{ui_port}")
        time.sleep(0.01)
    bound_port = ui_port
    for srv in server.servers:
        for sock in srv.sockets:
            bound_port = sock.getsockname()[1]
    return UiStack(daemon=daemon, server=server, thread=thread, port=bound_port, sims=sims)
