"""The 16-channel proportional valve terminal: register model, Modbus/TCP
server (simulator), and the pressure-writing client.

Register layout (this stack's wire contract): holding registers 0..15 are
the commanded channel pressures in integer millibars, clamped to 2500
(the 250 kPa hardware ceiling); input registers 0..15 are the simulated
actual pressures rounded to the nearest millibar. Writes above the
ceiling store the clamp; the write-single response echoes the stored
value. The MBAP unit id is ignored (single-terminal deployment).
"""
from __future__ import annotations

import math
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import modbus
from .modbus import (
    EXC_ILLEGAL_ADDRESS,
    EXC_ILLEGAL_FUNCTION,
    EXC_ILLEGAL_VALUE,
    READ_HOLDING,
    READ_INPUT,
    WRITE_MULTIPLE,
    WRITE_SINGLE,
)

N_CHANNELS = 16
PRESSURE_CEILING_MBAR = 2500
DEFAULT_TAU_S = 0.075
DEFAULT_PORT = 1502
DEFAULT_TICK_HZ = 100.0


class ValveTransportError(ConnectionError):
    """Lost or unusable connection to the valve terminal; reconnect and retry."""


class ModbusProtocolError(Exception):
    """The terminal answered with a Modbus exception."""

    def __init__(self, function: int, code: int):
        self.function = function
        self.code = code
        super().__init__(f"modbus exception 0x{code:02x} for function 0x{function:02x}")


def clamp_pressure(value: int) -> int:
    return max(0, min(int(value), PRESSURE_CEILING_MBAR))


@dataclass(frozen=True)
class ValveDynamics:
    """Per-channel first-order lag between commanded and actual pressure."""

    commanded_mbar: np.ndarray
    actual_mbar: np.ndarray
    tau_s: float = DEFAULT_TAU_S

    def __post_init__(self):
        commanded = np.asarray(self.commanded_mbar, dtype=float).reshape(N_CHANNELS)
        actual = np.asarray(self.actual_mbar, dtype=float).reshape(N_CHANNELS)
        if not self.tau_s > 0:
            raise ValueError(f"tau_s must be > 0, got {self.tau_s}")
        if np.any(actual < 0) or np.any(actual > PRESSURE_CEILING_MBAR):
            raise ValueError("actual pressures outside [0, 2500] mbar")
        commanded.flags.writeable = False
        actual.flags.writeable = False
        object.__setattr__(self, "commanded_mbar", commanded)
        object.__setattr__(self, "actual_mbar", actual)

    @staticmethod
    def at_rest(tau_s: float = DEFAULT_TAU_S) -> "ValveDynamics":
        return ValveDynamics(np.zeros(N_CHANNELS), np.zeros(N_CHANNELS), tau_s)


def step_dynamics(state: ValveDynamics, dt_s: float) -> ValveDynamics:
    """Advance the first-order response by dt using the exact exponential.

    actual += (commanded - actual) * (1 - e^(-dt/tau)); stable for any dt.
    """
    if not dt_s > 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    alpha = 1.0 - math.exp(-dt_s / state.tau_s)
    actual = state.actual_mbar + (state.commanded_mbar - state.actual_mbar) * alpha
    return ValveDynamics(state.commanded_mbar.copy(), actual, state.tau_s)


class ValveTerminal:
    """Register bank plus dynamics; owned by exactly one thread at a time."""

    def __init__(self, tau_s: float = DEFAULT_TAU_S):
        self.commanded = [0] * N_CHANNELS
        self.state = ValveDynamics.at_rest(tau_s)

    def tick(self, dt_s: float) -> None:
        self.state = step_dynamics(
            ValveDynamics(np.array(self.commanded, dtype=float), self.state.actual_mbar, self.state.tau_s),
            dt_s,
        )

    def actual_rounded(self) -> list[int]:
        return [int(round(v)) for v in self.state.actual_mbar]

    def apply_pdu(self, pdu: bytes) -> bytes:
        """Execute one request PDU, returning the response PDU."""
        if len(pdu) == 0:
            return modbus.exception_pdu(0, EXC_ILLEGAL_FUNCTION)
        function = pdu[0]
        if function in (READ_HOLDING, READ_INPUT):
            if len(pdu) != 5:
                return modbus.exception_pdu(function, EXC_ILLEGAL_VALUE)
            address, count = struct.unpack_from(">HH", pdu, 1)
            if not 1 <= count <= 125:
                return modbus.exception_pdu(function, EXC_ILLEGAL_VALUE)
            if address + count > N_CHANNELS:
                return modbus.exception_pdu(function, EXC_ILLEGAL_ADDRESS)
            values = (
                self.commanded[address : address + count]
                if function == READ_HOLDING
                else self.actual_rounded()[address : address + count]
            )
            return struct.pack(f">BB{count}H", function, 2 * count, *values)
        if function == WRITE_SINGLE:
            if len(pdu) != 5:
                return modbus.exception_pdu(function, EXC_ILLEGAL_VALUE)
            address, value = struct.unpack_from(">HH", pdu, 1)
            if address >= N_CHANNELS:
                return modbus.exception_pdu(function, EXC_ILLEGAL_ADDRESS)
            stored = clamp_pressure(value)
            self.commanded[address] = stored
            return struct.pack(">BHH", function, address, stored)
        if function == WRITE_MULTIPLE:
            if len(pdu) < 6:
                return modbus.exception_pdu(function, EXC_ILLEGAL_VALUE)
            address, count, byte_count = struct.unpack_from(">HHB", pdu, 1)
            if not 1 <= count <= 123 or byte_count != 2 * count or len(pdu) != 6 + byte_count:
                return modbus.exception_pdu(function, EXC_ILLEGAL_VALUE)
            if address + count > N_CHANNELS:
                return modbus.exception_pdu(function, EXC_ILLEGAL_ADDRESS)
            values = struct.unpack_from(f">{count}H", pdu, 6)
            for i, v in enumerate(values):
                self.commanded[address + i] = clamp_pressure(v)
            return struct.pack(">BHH", function, address, count)
        return modbus.exception_pdu(function, EXC_ILLEGAL_FUNCTION)


class ValveServer:
    """Modbus/TCP simulator for the valve terminal.

    All state mutation flows through a single engine thread consuming an
    ordered command stream; connection handlers only enqueue. With
    tick_hz set, a ticker advances the pressure dynamics on wall time;
    with tick_hz=None, tests drive time via advance().
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        tau_s: float = DEFAULT_TAU_S,
        tick_hz: float | None = DEFAULT_TICK_HZ,
    ):
        self._terminal = ValveTerminal(tau_s)
        self._host = host
        self._port = port
        self._tick_hz = tick_hz
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
    def address(self) -> tuple[str, int]:
        return (self._host, self.port)

    def start(self) -> "ValveServer":
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
        if self._tick_hz:
            t = threading.Thread(target=self._tick_loop, daemon=True)
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

    def __enter__(self) -> "ValveServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def advance(self, dt_s: float) -> None:
        """Advance simulated time by dt through the engine (manual-tick mode)."""
        done = queue.Queue(maxsize=1)
        self._queue.put(("tick", dt_s, done))
        done.get(timeout=2.0)

    def snapshot(self) -> tuple[list[int], list[float]]:
        """Commanded registers and raw actual pressures, via the engine."""
        done: queue.Queue = queue.Queue(maxsize=1)
        self._queue.put(("snapshot", None, done))
        return done.get(timeout=2.0)

    # engine thread: the only place terminal state is touched

    def _engine_loop(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            kind, payload, reply = item
            if kind == "tick":
                self._terminal.tick(payload)
                reply.put(True)
            elif kind == "snapshot":
                reply.put(
                    (list(self._terminal.commanded), [float(v) for v in self._terminal.state.actual_mbar])
                )
            else:  # "pdu"
                reply.put(self._terminal.apply_pdu(payload))

    def _tick_loop(self) -> None:
        period = 1.0 / float(self._tick_hz)
        last = time.perf_counter()
        while not self._stop.wait(period):
            now = time.perf_counter()
            dt, last = now - last, now
            if dt > 0:
                done: queue.Queue = queue.Queue(maxsize=1)
                self._queue.put(("tick", dt, done))
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
        buf = bytearray()
        try:
            self._serve_frames(conn, buf)
        finally:
            with self._conn_lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    def _serve_frames(self, conn: socket.socket, buf: bytearray) -> None:
        with conn:
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            while not self._stop.is_set():
                try:
                    frame = modbus.decode_frame(bytes(buf))
                except modbus.FrameError:
                    return  # unframeable stream: drop the connection
                if frame is None:
                    try:
                        chunk = conn.recv(4096)
                    except OSError:
                        return
                    if not chunk:
                        return
                    buf.extend(chunk)
                    continue
                consumed, transaction_id, unit_id, pdu = frame
                del buf[:consumed]
                reply: queue.Queue = queue.Queue(maxsize=1)
                self._queue.put(("pdu", pdu, reply))
                try:
                    response = reply.get(timeout=2.0)
                except queue.Empty:
                    return
                try:
                    conn.sendall(modbus.encode_frame(transaction_id, unit_id, response))
                except OSError:
                    return


def serve_valves(
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    tau_s: float = DEFAULT_TAU_S,
    tick_hz: float | None = DEFAULT_TICK_HZ,
) -> ValveServer:
    """Start a valve terminal simulator; returns the running server handle."""
    return ValveServer(host, port, tau_s, tick_hz).start()


class ValveClient:
    """Modbus/TCP client for the valve terminal; one writer at a time."""

    def __init__(self, host: str, port: int = DEFAULT_PORT, timeout_s: float = 2.0):
        self._timeout = timeout_s
        self._lock = threading.Lock()
        self._transaction = 0
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout_s)
            self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        except OSError as exc:
            raise ValveTransportError(
                f"cannot connect to valve terminal at {host}:{port} ({exc}); "
                "check the endpoint and reconnect"
            ) from exc

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "ValveClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _request(self, pdu: bytes) -> bytes:
        with self._lock:
            self._transaction = (self._transaction + 1) & 0xFFFF
            tid = self._transaction
            try:
                self._sock.sendall(modbus.encode_frame(tid, 1, pdu))
                buf = bytearray()
                while True:
                    frame = modbus.decode_frame(bytes(buf))
                    if frame is not None:
                        break
                    chunk = self._sock.recv(4096)
                    if not chunk:
                        raise ValveTransportError(
                            "valve terminal closed the connection; reconnect and retry"
                        )
                    buf.extend(chunk)
            except (OSError, modbus.FrameError) as exc:
                raise ValveTransportError(
                    f"valve terminal transport failure ({exc}); reconnect and retry"
                ) from exc
        _, rtid, _, response = frame
        if rtid != tid:
            raise ValveTransportError(
                f"transaction id mismatch (sent {tid}, got {rtid}); reconnect and retry"
            )
        if modbus.is_exception(response):
            raise ModbusProtocolError(response[0] & 0x7F, response[1])
        return response

    def write_pressures(self, pressures_mbar) -> None:
        """Write all 16 channels in one write-multiple, rounded to integer mbar."""
        vec = np.asarray(pressures_mbar, dtype=float).reshape(N_CHANNELS)
        values = [clamp_pressure(int(round(v))) for v in vec]
        self._request(modbus.write_multiple_pdu(0, values))

    def write_single(self, channel: int, value_mbar: float) -> int:
        """Write one channel; returns the value the terminal stored."""
        response = self._request(
            modbus.write_single_pdu(channel, max(0, int(round(value_mbar))))
        )
        _, _, stored = struct.unpack(">BHH", response)
        return stored

    def _read(self, function: int, address: int, count: int) -> list[int]:
        response = self._request(modbus.read_request_pdu(function, address, count))
        byte_count = response[1]
        return list(struct.unpack_from(f">{byte_count // 2}H", response, 2))

    def read_commanded(self, address: int = 0, count: int = N_CHANNELS) -> list[int]:
        return self._read(READ_HOLDING, address, count)

    def read_actual(self, address: int = 0, count: int = N_CHANNELS) -> list[int]:
        """One read of the input registers: actual pressures, nearest mbar."""
        return self._read(READ_INPUT, address, count)
