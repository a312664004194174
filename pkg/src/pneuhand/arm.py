"""Simulated robot-arm end effector: a rate-limited pose follower behind a
newline-delimited TCP protocol.

Wire grammar (UTF-8, one message per line, fields space-separated):
    MOVE x y z qw qx qy qz   -> OK | ERR workspace | ERR parse
    GET                      -> STATE x y z qw qx qy qz
    HOME                     -> OK
Positions are millimeters, orientations unit quaternions; numbers are
plain decimal floats (repr precision on output). The arm base frame is
z-up, x-forward.
"""
from __future__ import annotations

import queue
import socket
import threading
import time
from dataclasses import dataclass, replace

import numpy as np

from .transforms import Pose, rotate_towards

DEFAULT_PORT = 6001
DEFAULT_V_MAX_MM_S = 250.0
DEFAULT_W_MAX_DEG_S = 180.0
DEFAULT_STEP_HZ = 100.0


class ArmTransportError(ConnectionError):
    """Lost or unusable connection to the arm; reconnect and retry."""


class ArmCommandError(Exception):
    """The arm rejected a command (ERR reply); carries the reason."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"arm rejected command: {reason}")


@dataclass(frozen=True)
class WorkspaceBox:
    """Axis-aligned reachable box in the arm base frame, mm."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.asarray(self.low, dtype=float).reshape(3)
        high = np.asarray(self.high, dtype=float).reshape(3)
        if np.any(low >= high):
            raise ValueError("workspace box must have low < high on every axis")
        low.flags.writeable = False
        high.flags.writeable = False
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def contains(self, position) -> bool:
        p = np.asarray(position, dtype=float)
        return bool(np.all(p >= self.low) and np.all(p <= self.high))


def default_workspace() -> WorkspaceBox:
    return WorkspaceBox(np.array([-350.0, -350.0, 0.0]), np.array([350.0, 350.0, 700.0]))


@dataclass(frozen=True)
class ArmState:
    """Current and target pose with velocity limits and reachable box."""

    current: Pose
    target: Pose
    v_max_mm_s: float = DEFAULT_V_MAX_MM_S
    w_max_deg_s: float = DEFAULT_W_MAX_DEG_S
    workspace: WorkspaceBox = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.workspace is None:
            object.__setattr__(self, "workspace", default_workspace())
        if not self.v_max_mm_s > 0 or not self.w_max_deg_s > 0:
            raise ValueError("velocity limits must be > 0")
        for name, pose in (("current", self.current), ("target", self.target)):
            if not self.workspace.contains(pose.position):
                raise ValueError(f"{name} position outside workspace")


def step_arm(state: ArmState, dt_s: float) -> ArmState:
    """Advance toward the target at bounded linear and angular speed.

    Straight-line translation capped at v_max, shortest-arc rotation
    capped at w_max; each snaps exactly to the target once the remaining
    error fits in one step's budget.
    """
    if not dt_s > 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    delta = state.target.position - state.current.position
    dist = float(np.linalg.norm(delta))
    budget = state.v_max_mm_s * dt_s
    if dist <= budget:
        new_pos = state.target.position
    else:
        new_pos = state.current.position + delta * (budget / dist)
    new_quat = rotate_towards(state.current.quat, state.target.quat, state.w_max_deg_s * dt_s)
    return replace(state, current=Pose(new_pos, new_quat))


def format_pose(pose: Pose) -> str:
    values = [*pose.position, *pose.quat]
    return " ".join(repr(float(v)) for v in values)


def parse_pose(fields: list[str]) -> Pose:
    if len(fields) != 7:
        raise ValueError(f"expected 7 pose fields, got {len(fields)}")
    values = [float(f) for f in fields]
    if not all(np.isfinite(values)):
        raise ValueError("pose fields must be finite")
    return Pose(np.array(values[:3]), np.array(values[3:]))


class ArmServer:
    """TCP pose-follower simulator with the single-owner state contract."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        initial: Pose | None = None,
        v_max_mm_s: float = DEFAULT_V_MAX_MM_S,
        w_max_deg_s: float = DEFAULT_W_MAX_DEG_S,
        workspace: WorkspaceBox | None = None,
        step_hz: float | None = DEFAULT_STEP_HZ,
    ):
        if initial is None:
            initial = Pose(np.array([0.0, 0.0, 300.0]), np.array([1.0, 0.0, 0.0, 0.0]))
        self._home = initial
        self._state = ArmState(
            current=initial,
            target=initial,
            v_max_mm_s=v_max_mm_s,
            w_max_deg_s=w_max_deg_s,
            workspace=workspace if workspace is not None else default_workspace(),
        )
        self._host = host
        self._port = port
        self._step_hz = step_hz
        self._queue: queue.Queue = queue.Queue()
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._conns: set[socket.socket] = set()
        self._conn_lock = threading.Lock()
        self._stop = threading.Event()

    @property
    def port(self) -> int:
        if self._listener is None:
            raise RuntimeError("server not started")
        return self._listener.getsockname()[1]

    @property
    def home(self) -> Pose:
        return self._home

    def start(self) -> "ArmServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self._host, self._port))
        listener.listen(8)
        listener.settimeout(0.2)  # poll the stop flag; close alone may not wake accept
        self._listener = listener
        self._stop.clear()
        for target in (self._engine_loop, self._accept_loop):
            t = threading.Thread(target=target, daemon=True)
            t.start()
            self._threads.append(t)
        if self._step_hz:
            t = threading.Thread(target=self._step_loop, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._conn_lock:
            conns = list(self._conns)
        for conn in conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                conn.close()
            except OSError:
                pass
        self._queue.put(None)
        for t in self._threads:
            t.join(timeout=2.0)
        self._threads.clear()
        self._listener = None

    def __enter__(self) -> "ArmServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def advance(self, dt_s: float) -> None:
        """Advance simulated time through the engine (manual-step mode)."""
        done: queue.Queue = queue.Queue(maxsize=1)
        self._queue.put(("step", dt_s, done))
        done.get(timeout=2.0)

    def snapshot(self) -> ArmState:
        done: queue.Queue = queue.Queue(maxsize=1)
        self._queue.put(("snapshot", None, done))
        return done.get(timeout=2.0)

    def _engine_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            kind, payload, reply = item
            if kind == "step":
                self._state = step_arm(self._state, payload)
                reply.put(True)
            elif kind == "snapshot":
                reply.put(self._state)
            else:  # "line"
                reply.put(self._handle_line(payload))

    def _handle_line(self, line: str) -> str:
        fields = line.split()
        if not fields:
            return "ERR parse"
        verb = fields[0].upper()
        if verb == "GET":
            if len(fields) != 1:
                return "ERR parse"
            return f"STATE {format_pose(self._state.current)}"
        if verb == "HOME":
            if len(fields) != 1:
                return "ERR parse"
            self._state = replace(self._state, target=self._home)
            return "OK"
        if verb == "MOVE":
            try:
                pose = parse_pose(fields[1:])
            except ValueError:
                return "ERR parse"
            if not self._state.workspace.contains(pose.position):
                return "ERR workspace"
            self._state = replace(self._state, target=pose)
            return "OK"
        return "ERR parse"

    def _step_loop(self) -> None:
        period = 1.0 / float(self._step_hz)
        last = time.perf_counter()
        while not self._stop.wait(period):
            now = time.perf_counter()
            dt, last = now - last, now
            if dt > 0:
                done: queue.Queue = queue.Queue(maxsize=1)
                self._queue.put(("step", dt, done))
                try:
                    done.get(timeout=1.0)
                except queue.Empty:
                    return

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.settimeout(None)
            with self._conn_lock:
                self._conns.add(conn)
            t = threading.Thread(target=self._serve_connection, args=(conn,), daemon=True)
            t.start()

    def _serve_connection(self, conn: socket.socket) -> None:
        try:
            self._serve_lines(conn)
        finally:
            with self._conn_lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    def _serve_lines(self, conn: socket.socket) -> None:
        with conn:
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            reader = conn.makefile("r", encoding="utf-8", newline="\n")
            while not self._stop.is_set():
                try:
                    line = reader.readline()
                except OSError:
                    return
                if not line:
                    return
                reply: queue.Queue = queue.Queue(maxsize=1)
                self._queue.put(("line", line.rstrip("\n"), reply))
                try:
                    response = reply.get(timeout=2.0)
                except queue.Empty:
                    return
                try:
                    conn.sendall((response + "\n").encode("utf-8"))
                except OSError:
                    return


def serve_arm(
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    initial: Pose | None = None,
    **limits,
) -> ArmServer:
    """Start an arm simulator; returns the running server handle."""
    return ArmServer(host, port, initial, **limits).start()


class ArmClient:
    """Line-protocol client for the arm follower."""

    def __init__(self, host: str, port: int = DEFAULT_PORT, timeout_s: float = 2.0):
        self._lock = threading.Lock()
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout_s)
            self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError as exc:
            raise ArmTransportError(
                f"cannot connect to arm at {host}:{port} ({exc}); "
                "check the endpoint and reconnect"
            ) from exc
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "ArmClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _exchange(self, line: str) -> str:
        with self._lock:
            try:
                self._sock.sendall((line + "\n").encode("utf-8"))
                reply = self._reader.readline()
            except OSError as exc:
                raise ArmTransportError(
                    f"arm transport failure ({exc}); reconnect and retry"
                ) from exc
        if not reply:
            raise ArmTransportError("arm closed the connection; reconnect and retry")
        reply = reply.rstrip("\n")
        if reply.startswith("ERR"):
            raise ArmCommandError(reply[3:].strip() or "unknown")
        return reply

    def move(self, target: Pose) -> None:
        self._exchange(f"MOVE {format_pose(target)}")

    def get(self) -> Pose:
        reply = self._exchange("GET")
        fields = reply.split()
        if fields[:1] != ["STATE"]:
            raise ArmTransportError(f"unexpected GET reply {reply!r}")
        return parse_pose(fields[1:])

    def home(self) -> None:
        self._exchange("HOME")
