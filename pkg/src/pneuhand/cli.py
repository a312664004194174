"""Command-line surface: actuator design math, calibration fitting, the
simulators, trajectory replay, the fatigue harness, and the UI server.

Exit codes: 0 ok, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from pathlib import Path

from .actuator import (
    ActuatorSpec,
    BellowSpec,
    PressureAngleSample,
    bend_angle_per_chamber,
    bend_radius,
    chambers_for_angle,
    fit_calibration,
    fit_residual_rms,
    validate_spec,
)
from .arm import ArmClient, ArmServer
from .config import ConfigError, resolve_config
from .fatigue import (
    DEFAULT_CPM,
    DEFAULT_PRESSURE_MBAR,
    run_fatigue_live,
    run_fatigue_simulated,
)
from .teleop import FrameAlignment, calibrate, run_teleop
from .trajectory import TrajectoryError, load_trajectory
from .valves import DEFAULT_TAU_S, ValveClient, ValveServer

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """Argparse with the stack's usage exit code (1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_duration(text: str) -> float:
    """'90', '90s', '30m', '2h', '1.5h' -> seconds."""
    text = text.strip().lower()
    factor = 1.0
    if text.endswith(("s", "m", "h")):
        factor = {"s": 1.0, "m": 60.0, "h": 3600.0}[text[-1]]
        text = text[:-1]
    try:
        value = float(text)
    except ValueError as exc:
        raise ValueError(f"cannot parse duration {text!r}") from exc
    if value <= 0:
        raise ValueError("duration must be > 0")
    return value * factor


def _load_samples(path: Path) -> list[PressureAngleSample]:
    """Sample file: one 'pressure angle' pair per line, comma or whitespace
    separated, '#' comments allowed."""
    samples = []
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ValueError(f"cannot read samples file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'pressure angle', got {raw!r}")
        try:
            samples.append(PressureAngleSample(float(fields[0]), float(fields[1])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return samples


def cmd_design(args) -> int:
    bellow = BellowSpec(
        half_height_mm=args.x,
        width_mm=args.d,
        expansion_mm=args.delta_d,
        wall_mm=args.wall,
    )
    radius = bend_radius(bellow)
    per_chamber = bend_angle_per_chamber(bellow)
    count = chambers_for_angle(bellow, args.target_angle)
    spec = ActuatorSpec(bellow, count, chamber_thickness_mm=args.d)
    print(f"bend radius            {radius:8.2f} mm")
    print(f"bend per chamber       {per_chamber:8.2f} deg")
    print(f"chambers for {args.target_angle:5.1f} deg {count:6d}")
    findings = validate_spec(spec)
    if not findings:
        print("design checks          ok")
    for f in findings:
        print(f"{f.severity:<9} {f.field}: {f.message}")
    return EXIT_OK


def cmd_fit(args) -> int:
    samples = _load_samples(Path(args.samples))
    curve = fit_calibration(samples, max_pressure_mbar=args.max_pressure)
    rms = fit_residual_rms(curve, samples)
    fragment = {
        "slope_deg_per_mbar": curve.slope_deg_per_mbar,
        "max_pressure_mbar": curve.max_pressure_mbar,
    }
    print(f"slope        {curve.slope_deg_per_mbar:.6f} deg/mbar")
    print(f"residual rms {rms:.6f} deg")
    print(json.dumps(fragment))
    if args.out:
        Path(args.out).write_text(json.dumps(fragment, indent=2) + "\n", encoding="utf-8")
        print(f"curve fragment written to {args.out}")
    return EXIT_OK


def _start_sims(cfg):
    servers = []
    try:
        valve = ValveServer(
            cfg.valve.host, cfg.valve.port, cfg.valve.tau_s, cfg.valve.tick_hz
        ).start()
        servers.append(valve)
        print(f"valve terminal listening on {cfg.valve.host}:{valve.port}")
        for i, arm_cfg in enumerate(cfg.arms):
            arm = ArmServer(
                arm_cfg.host,
                arm_cfg.port,
                arm_cfg.home_pose(),
                v_max_mm_s=arm_cfg.v_max_mm_s,
                w_max_deg_s=arm_cfg.w_max_deg_s,
                workspace=arm_cfg.workspace(),
                step_hz=arm_cfg.step_hz,
            ).start()
            servers.append(arm)
            print(f"arm[{i}] listening on {arm_cfg.host}:{arm.port}")
    except OSError:
        for server in servers:
            server.stop()
        raise
    return servers


def _wait_for_signal() -> None:
    stop = threading.Event()
    previous = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        previous[sig] = signal.signal(sig, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)


def cmd_sim(args) -> int:
    cfg = resolve_config(args.config)
    servers = _start_sims(cfg)
    print("running; Ctrl-C to stop")
    try:
        _wait_for_signal()
    finally:
        for server in servers:
            server.stop()
        print("stopped")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = resolve_config(args.config)
    frames = load_trajectory(args.file)
    if not frames:
        raise TrajectoryError(f"trajectory {args.file} is empty")
    arm_cfg = cfg.arms[args.unit] if args.unit < len(cfg.arms) else None
    if arm_cfg is None:
        raise ValueError(f"unit {args.unit} not in configured arms (have {len(cfg.arms)})")
    geom = cfg.geometry()
    with ValveClient(cfg.valve.host, cfg.valve.port) as valve, ArmClient(
        arm_cfg.host, arm_cfg.port
    ) as arm:
        if args.align == "first-frame":
            alignment = calibrate(frames[0].wrist, arm.get())
        else:
            alignment = FrameAlignment.identity()
        report = run_teleop(
            frames,
            valve,
            arm,
            geom,
            alignment=alignment,
            rate_hz=args.rate,
            hold_s=args.hold,
        )
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_RUNTIME if report.aborted else EXIT_OK


def cmd_fatigue(args) -> int:
    duration_s = parse_duration(args.duration)
    if args.time_scale:
        report = run_fatigue_simulated(
            channel=args.channel,
            pressure_mbar=args.pressure,
            cycles_per_minute=args.cpm,
            duration_s=duration_s,
            tau_s=args.tau,
        )
    else:
        cfg = resolve_config(args.config)
        with ValveClient(cfg.valve.host, cfg.valve.port) as client:
            report = run_fatigue_live(
                client,
                channel=args.channel,
                pressure_mbar=args.pressure,
                cycles_per_minute=args.cpm,
                duration_s=duration_s,
            )
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_serve_ui(args) -> int:
    from .uiserver import serve_ui

    cfg = resolve_config(args.config)
    static_dir = args.static
    if static_dir is None:
        candidate = Path("frontend")
        static_dir = candidate if candidate.is_dir() else None
    stack = serve_ui(
        cfg, with_sim=args.with_sim, static_dir=static_dir, port=args.port
    )
    print(f"operator console on ws://127.0.0.1:{stack.port}/ws")
    try:
        _wait_for_signal()
    finally:
        stack.stop()
        print("stopped")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="pneuhand", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="size a bending actuator from bellow geometry")
    p.add_argument("--x", type=float, required=True, help="half bellow height, mm")
    p.add_argument("--d", type=float, required=True, help="bellow width / chamber thickness, mm")
    p.add_argument("--delta-d", dest="delta_d", type=float, required=True, help="midsection expansion, mm")
    p.add_argument("--wall", type=float, default=1.5, help="chamber wall thickness, mm")
    p.add_argument("--target-angle", type=float, default=180.0, help="total bend target, deg")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("fit", help="fit a pressure->angle calibration curve")
    p.add_argument("--samples", required=True, help="file of 'pressure angle' lines")
    p.add_argument("--max-pressure", type=float, default=500.0, help="command ceiling, mbar")
    p.add_argument("--out", help="write the curve fragment JSON here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sim", help="run valve + arm simulators until interrupted")
    p.add_argument("--config", help="stack config path (or $PNEUHAND_CONFIG)")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("replay", help="replay a trajectory file through the stack")
    p.add_argument("--file", required=True, help="trajectory JSONL path")
    p.add_argument("--rate", type=float, default=10.0, help="command rate, Hz")
    p.add_argument("--unit", type=int, default=0, help="arm/hand unit index")
    p.add_argument(
        "--align",
        choices=("first-frame", "identity"),
        default="first-frame",
        help="frame alignment: calibrate on the first frame, or pass poses through",
    )
    p.add_argument("--hold", type=float, default=None, help="keep commanding the last frame, s")
    p.add_argument("--config", help="stack config path (or $PNEUHAND_CONFIG)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("fatigue", help="cycle one channel and check peak pressures")
    p.add_argument("--channel", type=int, required=True, help="valve channel 0..15")
    p.add_argument("--pressure", type=float, default=DEFAULT_PRESSURE_MBAR, help="peak command, mbar")
    p.add_argument("--cpm", type=float, default=DEFAULT_CPM, help="cycles per minute")
    p.add_argument("--duration", default="2h", help="test length, e.g. 2h, 30m, 90s")
    p.add_argument(
        "--time-scale",
        action="store_true",
        help="run on a virtual clock against the valve model (fast)",
    )
    p.add_argument("--tau", type=float, default=DEFAULT_TAU_S, help="valve lag for --time-scale, s")
    p.add_argument("--config", help="stack config path (live mode endpoint)")
    p.set_defaults(func=cmd_fatigue)

    p = sub.add_parser("serve-ui", help="serve the operator console WebSocket (and frontend)")
    p.add_argument("--config", help="stack config path (or $PNEUHAND_CONFIG)")
    p.add_argument("--with-sim", action="store_true", help="also start the simulators in-process")
    p.add_argument("--port", type=int, default=None, help="override the configured UI port")
    p.add_argument("--static", default=None, help="frontend directory to serve at /")
    p.set_defaults(func=cmd_serve_ui)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_OK
    except (ValueError, ConfigError, TrajectoryError, OSError) as exc:
        print(f"pneuhand: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
