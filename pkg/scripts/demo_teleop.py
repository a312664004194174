#!/usr/bin/env python3
"""End-to-end demo on ephemeral ports: start the valve and arm simulators,
replay a generated gesture through the retargeting pipeline, and print the
session report plus the settled stack state.

Usage:
    python3 scripts/demo_teleop.py [--rate 10]
"""
import argparse
import json
import sys

from pneuhand.arm import ArmClient, ArmServer
from pneuhand.hand import default_hand_geometry
from pneuhand.teleop import calibrate, run_teleop
from pneuhand.valves import ValveClient, ValveServer

sys.path.insert(0, "scripts")
from make_trajectory import grasp_and_wave  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rate", type=float, default=10.0)
    args = parser.parse_args()

    frames = grasp_and_wave()
    geom = default_hand_geometry()
    valve = ValveServer(port=0).start()
    arm = ArmServer(port=0).start()
    try:
        with ValveClient("127.0.0.1", valve.port) as vclient, ArmClient(
            "127.0.0.1", arm.port
        ) as aclient:
            alignment = calibrate(frames[0].wrist, aclient.get())
            print(f"replaying {len(frames)} frames at {args.rate} Hz ...")
            report = run_teleop(
                frames, vclient, aclient, geom, alignment=alignment, rate_hz=args.rate
            )
            print(json.dumps(report.to_dict(), indent=2))
            print("settled commanded registers:", vclient.read_commanded())
            print("settled actual pressures:  ", vclient.read_actual())
            pose = aclient.get()
            print("arm pose:", [round(float(v), 1) for v in pose.position])
    finally:
        valve.stop()
        arm.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
