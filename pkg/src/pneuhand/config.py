"""Stack configuration: one human-editable JSON file, documented keys,
load->save->load identity. Defaults reproduce the paper stack: 0.272
deg/mbar calibration on every DoF, 10 Hz command rate, 75 ms valve lag,
one arm unit.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .actuator import CalibrationCurve
from .arm import (
    DEFAULT_STEP_HZ,
    DEFAULT_V_MAX_MM_S,
    DEFAULT_W_MAX_DEG_S,
    WorkspaceBox,
)
from .hand import (
    DofId,
    FingerGeometry,
    HandGeometry,
    default_hand_geometry,
)
from .transforms import Pose
from .valves import DEFAULT_TAU_S, DEFAULT_TICK_HZ

ENV_CONFIG_PATH = "PNEUHAND_CONFIG"


class ConfigError(ValueError):
    """Configuration parse/validation failure naming the offending key."""


def _require_keys(mapping: dict, allowed: set[str], context: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown config key {context}.{key}")
    for key in allowed:
        if key not in mapping:
            raise ConfigError(f"missing config key {context}.{key}")


def _vec(value, n: int, context: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ConfigError(f"config key {context} must be a {n}-element list")
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class ValveEndpointConfig:
    host: str = "127.0.0.1"
    port: int = 1502
    tau_s: float = DEFAULT_TAU_S
    tick_hz: float = DEFAULT_TICK_HZ

    @staticmethod
    def from_dict(d: dict, context: str = "valve") -> "ValveEndpointConfig":
        _require_keys(d, {"host", "port", "tau_s", "tick_hz"}, context)
        return ValveEndpointConfig(str(d["host"]), int(d["port"]), float(d["tau_s"]), float(d["tick_hz"]))


@dataclass(frozen=True)
class ArmEndpointConfig:
    host: str = "127.0.0.1"
    port: int = 6001
    v_max_mm_s: float = DEFAULT_V_MAX_MM_S
    w_max_deg_s: float = DEFAULT_W_MAX_DEG_S
    workspace_low: tuple = (-350.0, -350.0, 0.0)
    workspace_high: tuple = (350.0, 350.0, 700.0)
    home_pos: tuple = (0.0, 0.0, 300.0)
    home_quat: tuple = (1.0, 0.0, 0.0, 0.0)
    step_hz: float = DEFAULT_STEP_HZ

    @staticmethod
    def from_dict(d: dict, context: str = "arm") -> "ArmEndpointConfig":
        _require_keys(
            d,
            {
                "host",
                "port",
                "v_max_mm_s",
                "w_max_deg_s",
                "workspace_low",
                "workspace_high",
                "home_pos",
                "home_quat",
                "step_hz",
            },
            context,
        )
        return ArmEndpointConfig(
            host=str(d["host"]),
            port=int(d["port"]),
            v_max_mm_s=float(d["v_max_mm_s"]),
            w_max_deg_s=float(d["w_max_deg_s"]),
            workspace_low=_vec(d["workspace_low"], 3, f"{context}.workspace_low"),
            workspace_high=_vec(d["workspace_high"], 3, f"{context}.workspace_high"),
            home_pos=_vec(d["home_pos"], 3, f"{context}.home_pos"),
            home_quat=_vec(d["home_quat"], 4, f"{context}.home_quat"),
            step_hz=float(d["step_hz"]),
        )

    def home_pose(self) -> Pose:
        return Pose(np.array(self.home_pos), np.array(self.home_quat))

    def workspace(self) -> WorkspaceBox:
        return WorkspaceBox(np.array(self.workspace_low), np.array(self.workspace_high))


@dataclass(frozen=True)
class FingerConfig:
    root_pos: tuple
    root_quat: tuple
    proximal_mm: float
    distal_mm: float
    metacarpal_mm: float = 0.0

    @staticmethod
    def from_dict(d: dict, context: str) -> "FingerConfig":
        _require_keys(
            d, {"root_pos", "root_quat", "proximal_mm", "distal_mm", "metacarpal_mm"}, context
        )
        return FingerConfig(
            root_pos=_vec(d["root_pos"], 3, f"{context}.root_pos"),
            root_quat=_vec(d["root_quat"], 4, f"{context}.root_quat"),
            proximal_mm=float(d["proximal_mm"]),
            distal_mm=float(d["distal_mm"]),
            metacarpal_mm=float(d["metacarpal_mm"]),
        )


@dataclass(frozen=True)
class CurveConfig:
    slope_deg_per_mbar: float
    max_pressure_mbar: float

    @staticmethod
    def from_dict(d: dict, context: str) -> "CurveConfig":
        _require_keys(d, {"slope_deg_per_mbar", "max_pressure_mbar"}, context)
        return CurveConfig(float(d["slope_deg_per_mbar"]), float(d["max_pressure_mbar"]))


@dataclass(frozen=True)
class HandConfig:
    fingers: dict
    curves: dict
    limits: dict
    channel_map: dict

    @staticmethod
    def from_dict(d: dict, context: str = "hand") -> "HandConfig":
        _require_keys(d, {"fingers", "curves", "limits", "channel_map"}, context)
        fingers = {
            name: FingerConfig.from_dict(sub, f"{context}.fingers.{name}")
            for name, sub in d["fingers"].items()
        }
        for name, mapping in (("curves", d["curves"]), ("limits", d["limits"]), ("channel_map", d["channel_map"])):
            for key in mapping:
                try:
                    DofId(key)
                except ValueError as exc:
                    raise ConfigError(f"unknown config key {context}.{name}.{key}") from exc
        curves = {
            k: CurveConfig.from_dict(v, f"{context}.curves.{k}") for k, v in d["curves"].items()
        }
        limits = {k: float(v) for k, v in d["limits"].items()}
        channel_map = {k: int(v) for k, v in d["channel_map"].items()}
        return HandConfig(fingers, curves, limits, channel_map)

    def to_geometry(self) -> HandGeometry:
        fingers = {
            name: FingerGeometry(
                root=Pose(np.array(fc.root_pos), np.array(fc.root_quat)),
                proximal_mm=fc.proximal_mm,
                distal_mm=fc.distal_mm,
                metacarpal_mm=fc.metacarpal_mm,
            )
            for name, fc in self.fingers.items()
        }
        curves = {
            DofId(k): CalibrationCurve(c.slope_deg_per_mbar, c.max_pressure_mbar)
            for k, c in self.curves.items()
        }
        limits = {DofId(k): v for k, v in self.limits.items()}
        channel_map = {DofId(k): v for k, v in self.channel_map.items()}
        try:
            return HandGeometry(fingers, curves, limits, channel_map)
        except ValueError as exc:
            raise ConfigError(f"hand: {exc}") from exc

    @staticmethod
    def from_geometry(geom: HandGeometry) -> "HandConfig":
        return HandConfig(
            fingers={
                name: FingerConfig(
                    root_pos=tuple(float(v) for v in fg.root.position),
                    root_quat=tuple(float(v) for v in fg.root.quat),
                    proximal_mm=fg.proximal_mm,
                    distal_mm=fg.distal_mm,
                    metacarpal_mm=fg.metacarpal_mm,
                )
                for name, fg in geom.fingers.items()
            },
            curves={
                d.value: CurveConfig(c.slope_deg_per_mbar, c.max_pressure_mbar)
                for d, c in geom.curves.items()
            },
            limits={d.value: float(v) for d, v in geom.limits.items()},
            channel_map={d.value: int(v) for d, v in geom.channel_map.items()},
        )


@dataclass(frozen=True)
class StackConfig:
    valve: ValveEndpointConfig = field(default_factory=ValveEndpointConfig)
    arms: tuple = (ArmEndpointConfig(),)
    rate_hz: float = 10.0
    ui_port: int = 8765
    trajectory_dir: str = "trajectories"
    hand: HandConfig = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.hand is None:
            object.__setattr__(self, "hand", HandConfig.from_geometry(default_hand_geometry()))
        if not self.rate_hz > 0:
            raise ConfigError("config key rate_hz must be > 0")
        if not 1 <= len(self.arms) <= 2:
            raise ConfigError("config key arms must list exactly 1 or 2 endpoints")
        object.__setattr__(self, "arms", tuple(self.arms))

    @staticmethod
    def from_dict(d: dict) -> "StackConfig":
        _require_keys(
            d, {"valve", "arms", "rate_hz", "ui_port", "trajectory_dir", "hand"}, "stack"
        )
        if not isinstance(d["arms"], list) or not d["arms"]:
            raise ConfigError("config key stack.arms must be a non-empty list")
        return StackConfig(
            valve=ValveEndpointConfig.from_dict(d["valve"]),
            arms=tuple(
                ArmEndpointConfig.from_dict(sub, f"arms[{i}]") for i, sub in enumerate(d["arms"])
            ),
            rate_hz=float(d["rate_hz"]),
            ui_port=int(d["ui_port"]),
            trajectory_dir=str(d["trajectory_dir"]),
            hand=HandConfig.from_dict(d["hand"]),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arms"] = [asdict(a) for a in self.arms]
        for arm in d["arms"]:
            for key in ("workspace_low", "workspace_high", "home_pos", "home_quat"):
                arm[key] = list(arm[key])
        d["hand"]["fingers"] = {
            name: {**asdict(fc), "root_pos": list(fc.root_pos), "root_quat": list(fc.root_quat)}
            for name, fc in self.hand.fingers.items()
        }
        return d

    def geometry(self) -> HandGeometry:
        return self.hand.to_geometry()


def default_config() -> StackConfig:
    return StackConfig()


def load_config(path: str | Path) -> StackConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: top level must be an object")
    cfg = StackConfig.from_dict(data)
    cfg.geometry()  # fail fast on inconsistent hand tables
    return cfg


def save_config(cfg: StackConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def resolve_config(path: str | None) -> StackConfig:
    """Flag value wins, then the environment variable, then defaults."""
    if path:
        return load_config(path)
    env = os.environ.get(ENV_CONFIG_PATH)
    if env:
        return load_config(env)
    return default_config()
