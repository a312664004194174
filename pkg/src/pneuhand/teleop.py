"""Retargeting pipeline: frame alignment, per-frame command conversion,
and the fixed-rate command loop.

Rate reconciliation is freshest-wins: tracking may arrive faster than the
command rate; each tick consumes only the newest pending frame and older
ones are dropped, never queued.
"""
from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .arm import ArmClient, ArmCommandError, ArmTransportError
from .hand import HandGeometry, clamp_to_limits, hand_to_pressures
from .trajectory import TrackedFrame
from .transforms import Pose
from .valves import ValveClient, ValveTransportError

DEFAULT_RATE_HZ = 10.0


@dataclass(frozen=True)
class FrameAlignment:
    """Rigid transform mapping tracker-frame poses into the robot frame."""

    transform: Pose

    @staticmethod
    def identity() -> "FrameAlignment":
        return FrameAlignment(Pose.identity())

    @property
    def rotation_matrix(self) -> np.ndarray:
        return self.transform.rotation_matrix


def calibrate(human_start: Pose, robot_start: Pose) -> FrameAlignment:
    """Capture the alignment from paired start poses.

    The alignment A satisfies A * human_start = robot_start exactly, so
    retargeting the captured human pose reproduces the robot start.
    """
    return FrameAlignment(robot_start.compose(human_start.inverse()))


def retarget_pose(alignment: FrameAlignment, human: Pose) -> Pose:
    """Map a tracked wrist pose into the robot frame."""
    return alignment.transform.compose(human)


@dataclass(frozen=True)
class FrameCommands:
    """What one tracked frame commands: arm target plus pressure vector."""

    arm_target: Pose
    pressures_mbar: np.ndarray
    clamped_dofs: tuple


def frame_to_commands(
    frame: TrackedFrame, alignment: FrameAlignment, geom: HandGeometry
) -> FrameCommands:
    """Retarget the wrist and convert hand angles to channel pressures.

    Out-of-limit angles are clamped (reported via clamped_dofs), never
    rejected: teleoperation must keep streaming.
    """
    clamped, touched = clamp_to_limits(frame.hand, geom)
    return FrameCommands(
        arm_target=retarget_pose(alignment, frame.wrist),
        pressures_mbar=hand_to_pressures(clamped, geom),
        clamped_dofs=touched,
    )


class LatestMailbox:
    """Freshest-wins handoff: writers replace, the reader takes-and-clears."""

    def __init__(self):
        self._lock = threading.Lock()
        self._item = None
        self._closed = False
        self.dropped = 0

    def put(self, item) -> bool:
        """Store item, replacing any unread one. Returns True if one was dropped."""
        with self._lock:
            replaced = self._item is not None
            if replaced:
                self.dropped += 1
            self._item = item
            return replaced

    def take(self):
        with self._lock:
            item, self._item = self._item, None
            return item

    def close(self) -> None:
        with self._lock:
            self._closed = True

    @property
    def closed(self) -> bool:
        with self._lock:
            return self._closed and self._item is None


class RateScheduler:
    """Anti-drift fixed-rate scheduler; resyncs instead of bursting after overruns."""

    def __init__(self, rate_hz: float):
        if not rate_hz > 0:
            raise ValueError(f"rate_hz must be > 0, got {rate_hz}")
        self.period_s = 1.0 / rate_hz
        self._next = time.perf_counter()

    def sleep(self) -> None:
        self._next += self.period_s
        delay = self._next - time.perf_counter()
        if delay > 0:
            time.sleep(delay)
        else:
            self._next = time.perf_counter()


def _stats_ms(samples: list[float]) -> dict:
    if not samples:
        return {"mean": 0.0, "p50": 0.0, "p99": 0.0, "max": 0.0}
    arr = np.asarray(samples) * 1000.0
    return {
        "mean": float(arr.mean()),
        "p50": float(np.percentile(arr, 50)),
        "p99": float(np.percentile(arr, 99)),
        "max": float(arr.max()),
    }


@dataclass
class SessionReport:
    """Outcome of one command-loop session."""

    rate_hz: float
    ticks_sent: int = 0
    frames_consumed: int = 0
    frames_dropped: int = 0
    frames_clamped: int = 0
    poses_rejected: int = 0
    duration_s: float = 0.0
    send_latency_ms: dict = field(default_factory=dict)
    tick_jitter_ms: dict = field(default_factory=dict)
    aborted: str | None = None

    def to_dict(self) -> dict:
        return {
            "rate_hz": self.rate_hz,
            "ticks_sent": self.ticks_sent,
            "frames_consumed": self.frames_consumed,
            "frames_dropped": self.frames_dropped,
            "frames_clamped": self.frames_clamped,
            "poses_rejected": self.poses_rejected,
            "duration_s": self.duration_s,
            "send_latency_ms": self.send_latency_ms,
            "tick_jitter_ms": self.tick_jitter_ms,
            "aborted": self.aborted,
        }


def _feed(source: Iterable[TrackedFrame], mailbox: LatestMailbox, stop: threading.Event) -> None:
    start: float | None = None
    t0 = 0.0
    for frame in source:
        if stop.is_set():
            break
        if start is None:
            start, t0 = time.perf_counter(), frame.t_s
        else:
            delay = (frame.t_s - t0) - (time.perf_counter() - start)
            if delay > 0 and stop.wait(delay):
                break
        mailbox.put(frame)
    mailbox.close()


def run_teleop(
    source: Iterable[TrackedFrame],
    valve_client: ValveClient,
    arm_client: ArmClient,
    geom: HandGeometry,
    alignment: FrameAlignment | None = None,
    rate_hz: float = DEFAULT_RATE_HZ,
    hold_s: float | None = None,
) -> SessionReport:
    """Replay a frame source against live clients at a fixed command rate.

    Frames are fed on their own timeline into a freshest-wins mailbox; each
    tick sends the newest frame's commands (arm MOVE plus one valve write).
    With hold_s set, the last frame keeps being commanded until the session
    has lasted at least that long. Transport failure aborts with a partial
    report; workspace rejections are counted, not fatal.
    """
    if alignment is None:
        alignment = FrameAlignment.identity()
    report = SessionReport(rate_hz=rate_hz)
    mailbox = LatestMailbox()
    stop = threading.Event()
    feeder = threading.Thread(target=_feed, args=(source, mailbox, stop), daemon=True)

    current: FrameCommands | None = None
    latencies: list[float] = []
    tick_times: list[float] = []
    scheduler = RateScheduler(rate_hz)
    started = time.perf_counter()
    feeder.start()
    try:
        while True:
            frame = mailbox.take()
            if frame is not None:
                report.frames_consumed += 1
                current = frame_to_commands(frame, alignment, geom)
                if current.clamped_dofs:
                    report.frames_clamped += 1
            if current is not None:
                sent_at = time.perf_counter()
                try:
                    arm_client.move(current.arm_target)
                except ArmCommandError:
                    report.poses_rejected += 1
                valve_client.write_pressures(current.pressures_mbar)
                latencies.append(time.perf_counter() - sent_at)
                tick_times.append(sent_at)
                report.ticks_sent += 1
            elapsed = time.perf_counter() - started
            if mailbox.closed and (hold_s is None or elapsed >= hold_s):
                break
            scheduler.sleep()
    except (ValveTransportError, ArmTransportError) as exc:
        report.aborted = str(exc)
    finally:
        stop.set()
        feeder.join(timeout=2.0)
    report.duration_s = time.perf_counter() - started
    report.frames_dropped = mailbox.dropped
    report.send_latency_ms = _stats_ms(latencies)
    if len(tick_times) >= 2:
        intervals = np.diff(np.asarray(tick_times))
        report.tick_jitter_ms = _stats_ms(list(np.abs(intervals - scheduler.period_s)))
    else:
        report.tick_jitter_ms = _stats_ms([])
    return report
