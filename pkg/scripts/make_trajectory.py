#!/usr/bin/env python3
"""Generate demo trajectory files: a rest hold, a grasp-and-wave gesture,
and a pinch approach. Output is the stack's JSONL trajectory format.

Usage:
    python3 scripts/make_trajectory.py [outdir]
"""
import math
import sys
from pathlib import Path

import numpy as np

from pneuhand.hand import DofId, HandState, preset_pose
from pneuhand.trajectory import TrackedFrame, save_trajectory
from pneuhand.transforms import Pose, quat_from_axis_angle


def lerp_state(a: HandState, b: HandState, t: float) -> HandState:
    return HandState({d: (1 - t) * a[d] + t * b[d] for d in DofId})


def rest_hold(duration_s=2.0, fps=10.0):
    wrist = Pose(np.array([0.0, 0.0, 300.0]), np.array([1.0, 0, 0, 0]))
    hand = HandState.zero()
    n = int(duration_s * fps) + 1
    return [TrackedFrame(i / fps, wrist, hand) for i in range(n)]


def grasp_and_wave(fps=30.0):
    frames = []
    open_hand = preset_pose("open")
    fist = preset_pose("fist")
    for i in range(int(6.0 * fps)):
        t = i / fps
        # wave laterally while closing and reopening the hand
        x = 80.0 * math.sin(2 * math.pi * t / 3.0)
        yaw = 20.0 * math.sin(2 * math.pi * t / 3.0)
        wrist = Pose(
            np.array([x, 0.0, 300.0 + 30.0 * math.sin(2 * math.pi * t / 6.0)]),
            quat_from_axis_angle([0, 0, 1], yaw),
        )
        phase = 0.5 - 0.5 * math.cos(2 * math.pi * t / 6.0)
        frames.append(TrackedFrame(t, wrist, lerp_state(open_hand, fist, phase)))
    return frames


def pinch_approach(fps=30.0):
    frames = []
    open_hand = preset_pose("open")
    pinch = preset_pose("pinch")
    for i in range(int(3.0 * fps)):
        t = i / fps
        wrist = Pose(np.array([0.0, 40.0 * t / 3.0, 300.0 - 20.0 * t / 3.0]), np.array([1.0, 0, 0, 0]))
        frames.append(TrackedFrame(t, wrist, lerp_state(open_hand, pinch, min(1.0, t / 2.0))))
    return frames


def main() -> int:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("trajectories")
    outdir.mkdir(parents=True, exist_ok=True)
    for name, frames in (
        ("rest.jsonl", rest_hold()),
        ("grasp_wave.jsonl", grasp_and_wave()),
        ("pinch_approach.jsonl", pinch_approach()),
    ):
        count = save_trajectory(frames, outdir / name)
        print(f"wrote {outdir / name} ({count} frames)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
