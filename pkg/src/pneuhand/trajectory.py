"""Recorded operator trajectories: one JSON object per line.

Record schema: {"t": seconds, "pos": [x, y, z] mm, "quat": [w, x, y, z],
"angles": {dof name: degrees, ... all 15}}. Timestamps must strictly
increase. Floats survive a save/load round trip bit-exactly (JSON uses
repr). Hand angles may sit outside joint limits; the teleop pipeline
clamps them per frame.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .hand import DofId, HandState
from .transforms import Pose


class TrajectoryError(ValueError):
    """Trajectory file parse or validation failure; names the line."""


@dataclass(frozen=True)
class TrackedFrame:
    """One timestamped sample of operator wrist pose plus hand angles."""

    t_s: float
    wrist: Pose
    hand: HandState

    def __post_init__(self):
        if not math.isfinite(self.t_s):
            raise ValueError(f"timestamp must be finite, got {self.t_s}")


def frame_to_record(frame: TrackedFrame) -> dict:
    return {
        "t": frame.t_s,
        "pos": [float(v) for v in frame.wrist.position],
        "quat": [float(v) for v in frame.wrist.quat],
        "angles": frame.hand.as_dict(),
    }


def frame_from_record(record: dict) -> TrackedFrame:
    for key in ("t", "pos", "quat", "angles"):
        if key not in record:
            raise ValueError(f"missing field {key!r}")
    pos = record["pos"]
    quat = record["quat"]
    if not isinstance(pos, list) or len(pos) != 3:
        raise ValueError("field 'pos' must be a 3-element list")
    if not isinstance(quat, list) or len(quat) != 4:
        raise ValueError("field 'quat' must be a 4-element list")
    angles = record["angles"]
    if not isinstance(angles, dict):
        raise ValueError("field 'angles' must be an object")
    try:
        hand = HandState({DofId(k): v for k, v in angles.items()})
    except ValueError as exc:
        raise ValueError(f"field 'angles': {exc}") from exc
    try:
        wrist = Pose(np.array(pos, dtype=float), np.array(quat, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"field 'pos'/'quat': {exc}") from exc
    return TrackedFrame(float(record["t"]), wrist, hand)


def save_trajectory(frames: Iterable[TrackedFrame], path: str | Path) -> int:
    """Write frames as JSON lines; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(json.dumps(frame_to_record(frame)) + "\n")
            count += 1
    return count


def load_trajectory(path: str | Path) -> list[TrackedFrame]:
    """Read and validate a trajectory file; errors carry the line number."""
    frames: list[TrackedFrame] = []
    last_t: float | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise TrajectoryError(f"line {lineno}: invalid record ({exc.msg})") from exc
            try:
                frame = frame_from_record(record)
            except (ValueError, TypeError) as exc:
                raise TrajectoryError(f"line {lineno}: {exc}") from exc
            if last_t is not None and frame.t_s <= last_t:
                raise TrajectoryError(
                    f"line {lineno}: timestamp {frame.t_s} not after {last_t}"
                )
            last_t = frame.t_s
            frames.append(frame)
    return frames


def constant_trajectory(frame: TrackedFrame, duration_s: float, fps: float = 10.0) -> Iterator[TrackedFrame]:
    """Repeat one frame over a time span (for hold-still sessions)."""
    n = max(1, int(round(duration_s * fps)) + 1)
    for i in range(n):
        yield TrackedFrame(frame.t_s + i / fps, frame.wrist, frame.hand)
