"""The 15-DoF hand: DoF map, calibration, and fingertip kinematics.

Palm frame convention: +x toward the thumb side, +y distal (straight
fingers point along +y), +z out of the back of the hand. Flexion curls
fingertips toward -z; spread swings fingers about the palm normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .actuator import (
    CalibrationCurve,
    angle_to_pressure,
    pressure_to_angle,
    VALVE_CEILING_MBAR,
)
from .transforms import Pose, quat_from_axis_angle, quat_mul, quat_rotate

N_CHANNELS = 16
UNUSED_CHANNEL = 15  # 15 DoFs on a 16-channel terminal


class DofId(str, Enum):
    """The 15 actuated degrees of freedom, in default channel order."""

    index_mcp_flex = "index_mcp_flex"
    index_dippip_flex = "index_dippip_flex"
    middle_mcp_flex = "middle_mcp_flex"
    middle_dippip_flex = "middle_dippip_flex"
    ring_mcp_flex = "ring_mcp_flex"
    ring_dippip_flex = "ring_dippip_flex"
    pinky_mcp_flex = "pinky_mcp_flex"
    pinky_dippip_flex = "pinky_dippip_flex"
    spread_1 = "spread_1"
    spread_2 = "spread_2"
    spread_3 = "spread_3"
    thumb_mcp_flex = "thumb_mcp_flex"
    thumb_ip_flex = "thumb_ip_flex"
    thumb_mcp_spread = "thumb_mcp_spread"
    thumb_cmc_oppose = "thumb_cmc_oppose"


DEFAULT_CHANNEL_MAP: Mapping[DofId, int] = MappingProxyType(
    {dof: i for i, dof in enumerate(DofId)}
)

FLEXION_DOFS = frozenset(
    {
        DofId.index_mcp_flex,
        DofId.index_dippip_flex,
        DofId.middle_mcp_flex,
        DofId.middle_dippip_flex,
        DofId.ring_mcp_flex,
        DofId.ring_dippip_flex,
        DofId.pinky_mcp_flex,
        DofId.pinky_dippip_flex,
        DofId.thumb_mcp_flex,
        DofId.thumb_ip_flex,
    }
)
SPREAD_DOFS = frozenset(
    {DofId.spread_1, DofId.spread_2, DofId.spread_3, DofId.thumb_mcp_spread}
)

DEFAULT_FLEXION_LIMIT_DEG = 180.0
DEFAULT_SPREAD_LIMIT_DEG = 30.0
DEFAULT_OPPOSE_LIMIT_DEG = 90.0

FINGER_ORDER = ("thumb", "index", "middle", "ring", "pinky")

# Which DoF drives each finger's two flexion segments (proximal, distal).
FINGER_FLEX_DOFS: Mapping[str, tuple[DofId, DofId]] = MappingProxyType(
    {
        "thumb": (DofId.thumb_mcp_flex, DofId.thumb_ip_flex),
        "index": (DofId.index_mcp_flex, DofId.index_dippip_flex),
        "middle": (DofId.middle_mcp_flex, DofId.middle_dippip_flex),
        "ring": (DofId.ring_mcp_flex, DofId.ring_dippip_flex),
        "pinky": (DofId.pinky_mcp_flex, DofId.pinky_dippip_flex),
    }
)

# Spread convention: the middle finger is fixed; spread_1/2/3 abduct index,
# ring, pinky away from it. Sign is the Rz direction that moves the tip
# away from the middle finger (+x is the thumb side).
FINGER_SPREAD_DOFS: Mapping[str, tuple[DofId, float]] = MappingProxyType(
    {
        "index": (DofId.spread_1, -1.0),
        "ring": (DofId.spread_2, 1.0),
        "pinky": (DofId.spread_3, 1.0),
        "thumb": (DofId.thumb_mcp_spread, -1.0),
    }
)


@dataclass(frozen=True)
class HandState:
    """Joint angle per DoF, degrees. Limits are enforced at operation boundaries."""

    angles: Mapping[DofId, float]

    def __post_init__(self):
        converted: dict[DofId, float] = {}
        for key, value in self.angles.items():
            dof = DofId(key)
            v = float(value)
            if not math.isfinite(v):
                raise ValueError(f"{dof.value} angle must be finite, got {value}")
            converted[dof] = v
        missing = [d.value for d in DofId if d not in converted]
        if missing:
            raise ValueError(f"missing angles for DoFs: {missing}")
        ordered = {d: converted[d] for d in DofId}
        object.__setattr__(self, "angles", MappingProxyType(ordered))

    def __getitem__(self, dof: DofId) -> float:
        return self.angles[DofId(dof)]

    @staticmethod
    def zero() -> "HandState":
        return HandState({d: 0.0 for d in DofId})

    def replace(self, updates: Mapping[DofId, float]) -> "HandState":
        merged = dict(self.angles)
        for key, value in updates.items():
            merged[DofId(key)] = float(value)
        return HandState(merged)

    def as_dict(self) -> dict[str, float]:
        return {d.value: self.angles[d] for d in DofId}


@dataclass(frozen=True)
class FingerGeometry:
    """Root pose in the palm frame plus the two flexor segment lengths.

    `metacarpal_mm` is a rigid link between the root rotation center and
    the first actuated segment; nonzero only for the thumb, whose CMC
    mechanism sits a bone's length below its bending actuators.
    """

    root: Pose
    proximal_mm: float  # MCP-driven segment
    distal_mm: float  # combined DIP+PIP-driven segment
    metacarpal_mm: float = 0.0

    def __post_init__(self):
        if not self.proximal_mm > 0 or not self.distal_mm > 0:
            raise ValueError("finger segment lengths must be > 0")
        if self.metacarpal_mm < 0:
            raise ValueError("metacarpal_mm must be >= 0")


@dataclass(frozen=True)
class HandGeometry:
    """Per-finger layout, per-DoF calibration curves, limits, and channel map."""

    fingers: Mapping[str, FingerGeometry]
    curves: Mapping[DofId, CalibrationCurve]
    limits: Mapping[DofId, float]
    channel_map: Mapping[DofId, int]

    def __post_init__(self):
        fingers = dict(self.fingers)
        if set(fingers) != set(FINGER_ORDER):
            raise ValueError(f"fingers must be exactly {FINGER_ORDER}, got {sorted(fingers)}")
        roots = [tuple(f.root.position) for f in fingers.values()]
        if len(set(roots)) != len(roots):
            raise ValueError("finger root positions must be distinct")
        curves = {DofId(k): v for k, v in self.curves.items()}
        limits = {DofId(k): float(v) for k, v in self.limits.items()}
        channel_map = {DofId(k): int(v) for k, v in self.channel_map.items()}
        for name, mapping in (("curves", curves), ("limits", limits), ("channel_map", channel_map)):
            missing = [d.value for d in DofId if d not in mapping]
            if missing:
                raise ValueError(f"{name} missing DoFs: {missing}")
        for dof, lim in limits.items():
            if not lim > 0:
                raise ValueError(f"limit for {dof.value} must be > 0, got {lim}")
        channels = sorted(channel_map.values())
        if channels != list(range(15)):
            raise ValueError(
                f"channel_map must be a bijection onto 0..14, got {channels}"
            )
        object.__setattr__(self, "fingers", MappingProxyType(fingers))
        object.__setattr__(self, "curves", MappingProxyType(curves))
        object.__setattr__(self, "limits", MappingProxyType(limits))
        object.__setattr__(self, "channel_map", MappingProxyType(channel_map))

    def channel_of(self, dof: DofId) -> int:
        return self.channel_map[DofId(dof)]

    def dof_of_channel(self, channel: int) -> DofId | None:
        for dof, ch in self.channel_map.items():
            if ch == channel:
                return dof
        return None


def default_limits() -> dict[DofId, float]:
    limits = {}
    for dof in DofId:
        if dof in FLEXION_DOFS:
            limits[dof] = DEFAULT_FLEXION_LIMIT_DEG
        elif dof in SPREAD_DOFS:
            limits[dof] = DEFAULT_SPREAD_LIMIT_DEG
        else:
            limits[dof] = DEFAULT_OPPOSE_LIMIT_DEG
    return limits


def default_hand_geometry(
    slope_deg_per_mbar: float = 0.272,
    max_pressure_mbar: float = 500.0,
) -> HandGeometry:
    """Human-scale default layout with one shared calibration curve."""
    identity = np.array([1.0, 0.0, 0.0, 0.0])
    fingers = {
        "index": FingerGeometry(Pose(np.array([27.0, 95.0, 0.0]), identity), 45.0, 45.0),
        "middle": FingerGeometry(Pose(np.array([9.0, 95.0, 0.0]), identity), 45.0, 45.0),
        "ring": FingerGeometry(Pose(np.array([-9.0, 95.0, 0.0]), identity), 45.0, 45.0),
        "pinky": FingerGeometry(Pose(np.array([-27.0, 95.0, 0.0]), identity), 45.0, 45.0),
        "thumb": FingerGeometry(
            Pose(np.array([42.0, 45.0, 0.0]), quat_from_axis_angle([0, 0, 1], -50.0)),
            35.0,
            35.0,
            metacarpal_mm=40.0,
        ),
    }
    curve = CalibrationCurve(slope_deg_per_mbar, max_pressure_mbar)
    return HandGeometry(
        fingers=fingers,
        curves={d: curve for d in DofId},
        limits=default_limits(),
        channel_map=dict(DEFAULT_CHANNEL_MAP),
    )


def check_within_limits(state: HandState, geom: HandGeometry) -> None:
    """Raise naming the first DoF whose angle is outside [0, limit]."""
    for dof in DofId:
        angle = state[dof]
        limit = geom.limits[dof]
        if angle < 0 or angle > limit:
            raise ValueError(
                f"{dof.value} angle {angle} deg outside [0, {limit}] deg"
            )


def clamp_to_limits(state: HandState, geom: HandGeometry) -> tuple[HandState, tuple[DofId, ...]]:
    """Clamp every angle into [0, limit]; returns the clamped DoFs."""
    clamped: dict[DofId, float] = {}
    touched: list[DofId] = []
    for dof in DofId:
        angle = state[dof]
        limit = geom.limits[dof]
        lo = min(max(angle, 0.0), limit)
        if lo != angle:
            touched.append(dof)
        clamped[dof] = lo
    return HandState(clamped), tuple(touched)


def hand_to_pressures(state: HandState, geom: HandGeometry) -> np.ndarray:
    """Map joint angles to the 16-channel pressure vector, mbar (channel 15 = 0)."""
    check_within_limits(state, geom)
    vec = np.zeros(N_CHANNELS)
    for dof in DofId:
        vec[geom.channel_map[dof]] = angle_to_pressure(geom.curves[dof], state[dof])
    return vec


def pressures_to_hand(pressures: np.ndarray, geom: HandGeometry) -> HandState:
    """Map a pressure vector back to joint angles, clamped at joint limits."""
    vec = np.asarray(pressures, dtype=float).reshape(N_CHANNELS)
    if np.any(vec < 0) or np.any(vec > VALVE_CEILING_MBAR):
        raise ValueError(
            f"pressures must be within [0, {VALVE_CEILING_MBAR}] mbar"
        )
    angles = {}
    for dof in DofId:
        angle = pressure_to_angle(geom.curves[dof], float(vec[geom.channel_map[dof]]))
        angles[dof] = min(angle, geom.limits[dof])
    return HandState(angles)


def arc_displacement(length_mm: float, bend_deg: float) -> tuple[float, float]:
    """In-plane displacement (lateral, along) of one constant-curvature segment.

    A segment of length L bent by angle phi is a circular arc of radius
    L/phi; phi = 0 degenerates to a straight segment (0, L).
    """
    if length_mm <= 0:
        raise ValueError(f"segment length must be > 0, got {length_mm}")
    phi = math.radians(bend_deg)
    if phi == 0.0:
        return 0.0, length_mm
    radius = length_mm / phi
    return radius * (1.0 - math.cos(phi)), radius * math.sin(phi)


def arc_chain(segments: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Chain constant-curvature segments in the bend plane.

    Starts at the origin heading +along; each (length_mm, bend_deg) segment
    advances the point and rotates the heading by its bend. Returns the
    polyline of segment endpoints (excluding the origin).
    """
    x = 0.0  # lateral (bend direction)
    y = 0.0  # along the unbent axis
    heading = 0.0  # radians, accumulated bend
    points = []
    for length_mm, bend_deg in segments:
        lat, alo = arc_displacement(length_mm, bend_deg)
        c, s = math.cos(heading), math.sin(heading)
        x += lat * c + alo * s
        y += -lat * s + alo * c
        heading += math.radians(bend_deg)
        points.append((x, y))
    return points


def fingertip_positions(state: HandState, geom: HandGeometry) -> dict[str, np.ndarray]:
    """Fingertip of each finger in the palm frame, mm.

    Each finger is two constant-curvature arcs in its flexion plane,
    rotated about the palm normal by its spread azimuth; the thumb root
    additionally swings by the CMC opposition angle before its spread,
    carrying its rigid metacarpal link along.
    """
    check_within_limits(state, geom)
    tips: dict[str, np.ndarray] = {}
    for finger in FINGER_ORDER:
        tips[finger] = _finger_chain(state, geom, finger)[-1]
    return tips


def _finger_chain(state: HandState, geom: HandGeometry, finger: str, samples_per_segment: int = 1) -> list[np.ndarray]:
    """Palm-frame points along one finger: [root, (arc samples...), tip].

    samples_per_segment = 1 yields just segment endpoints; larger values
    subdivide each arc for drawing.
    """
    fg = geom.fingers[finger]
    prox_dof, dist_dof = FINGER_FLEX_DOFS[finger]
    segments = [(fg.proximal_mm, state[prox_dof]), (fg.distal_mm, state[dist_dof])]
    subdivided: list[tuple[float, float]] = []
    for length_mm, bend_deg in segments:
        n = max(1, samples_per_segment)
        subdivided.extend([(length_mm / n, bend_deg / n)] * n)
    chain = arc_chain(subdivided)

    q = fg.root.quat
    if finger == "thumb":
        # CMC opposition swings the whole thumb about the palm's distal
        # axis at the root point: 0 deg lies in the palm plane, 90 deg
        # faces the curled fingers.
        oppose = quat_from_axis_angle([0, 1, 0], state[DofId.thumb_cmc_oppose])
        q = quat_mul(oppose, q)
    spread = FINGER_SPREAD_DOFS.get(finger)
    if spread is not None:
        dof, sign = spread
        q = quat_mul(q, quat_from_axis_angle([0, 0, 1], sign * state[dof]))
    meta = np.array([0.0, fg.metacarpal_mm, 0.0])
    points = [fg.root.position]
    if fg.metacarpal_mm > 0:
        points.append(fg.root.position + quat_rotate(q, meta))
    for lat, alo in chain:
        local = meta + np.array([0.0, alo, -lat])  # flexion curls toward -z
        points.append(fg.root.position + quat_rotate(q, local))
    return points


PRESET_NAMES = ("open", "fist", "pinch", "point", "spread", "thumbs_up", "opposed")

# Pinch angles frozen from a grid search that brings the index and thumb
# tips within 1 mm of each other under the default geometry.
_PINCH_ANGLES: dict[DofId, float] = {
    DofId.index_mcp_flex: 100.0,
    DofId.index_dippip_flex: 70.0,
    DofId.thumb_mcp_flex: 20.0,
    DofId.thumb_ip_flex: 160.0,
    DofId.thumb_cmc_oppose: 75.0,
}


def preset_pose(name: str, geom: HandGeometry | None = None) -> HandState:
    """Deterministic named hand poses, scaled to the configured limits."""
    if geom is None:
        geom = default_hand_geometry()
    lim = geom.limits
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; valid: {', '.join(PRESET_NAMES)}")
    state = HandState.zero()
    if name == "open":
        return state
    if name == "fist":
        return state.replace({d: lim[d] for d in FLEXION_DOFS})
    if name == "point":
        flex = {d: lim[d] for d in FLEXION_DOFS}
        flex[DofId.index_mcp_flex] = 0.0
        flex[DofId.index_dippip_flex] = 0.0
        return state.replace(flex)
    if name == "spread":
        return state.replace({d: lim[d] for d in SPREAD_DOFS})
    if name == "thumbs_up":
        flex = {
            d: lim[d]
            for d in FLEXION_DOFS
            if d not in (DofId.thumb_mcp_flex, DofId.thumb_ip_flex)
        }
        flex[DofId.thumb_mcp_spread] = lim[DofId.thumb_mcp_spread]
        return state.replace(flex)
    if name == "opposed":
        return state.replace({DofId.thumb_cmc_oppose: lim[DofId.thumb_cmc_oppose]})
    # pinch
    return state.replace(
        {d: min(a, lim[d]) for d, a in _PINCH_ANGLES.items()}
    )
