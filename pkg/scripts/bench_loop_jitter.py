#!/usr/bin/env python3
"""Measure command-loop timing against local simulators: runs a fixed-rate
hold session and prints the inter-tick jitter distribution. The soft
contract is p99 < 20 ms at 10 Hz on a developer machine.

Usage:
    python3 scripts/bench_loop_jitter.py [--rate 10] [--seconds 10]
"""
import argparse
import json
import sys

import numpy as np

from pneuhand.arm import ArmClient, ArmServer
from pneuhand.hand import HandState, default_hand_geometry
from pneuhand.teleop import run_teleop
from pneuhand.trajectory import TrackedFrame
from pneuhand.transforms import Pose
from pneuhand.valves import ValveClient, ValveServer


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rate", type=float, default=10.0)
    parser.add_argument("--seconds", type=float, default=10.0)
    args = parser.parse_args()

    frame = TrackedFrame(
        0.0, Pose(np.array([0.0, 0.0, 300.0]), np.array([1.0, 0, 0, 0])), HandState.zero()
    )
    valve = ValveServer(port=0).start()
    arm = ArmServer(port=0).start()
    try:
        with ValveClient("127.0.0.1", valve.port) as vclient, ArmClient(
            "127.0.0.1", arm.port
        ) as aclient:
            report = run_teleop(
                [frame],
                vclient,
                aclient,
                default_hand_geometry(),
                rate_hz=args.rate,
                hold_s=args.seconds,
            )
    finally:
        valve.stop()
        arm.stop()
    print(json.dumps(report.to_dict(), indent=2))
    p99 = report.tick_jitter_ms["p99"]
    verdict = "within" if p99 < 20.0 else "OUTSIDE"
    print(f"\np99 inter-tick jitter {p99:.2f} ms -> {verdict} the 20 ms soft budget")
    return 0


if __name__ == "__main__":
    sys.exit(main())
