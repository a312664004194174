"""Bellow geometry, actuator bending, design checks, and pressure calibration.

A bending actuator is a series of identical elastomeric chambers whose
midsections expand under pressure while the base layer does not, so the
whole series curls. Lengths are millimeters, angles degrees, pressures
millibars.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

VALVE_CEILING_MBAR = 2500.0  # proportional terminal hardware limit (250 kPa)
DEFAULT_RATED_PRESSURE_MBAR = 500.0
DEFAULT_MAX_PRESSURE_MBAR = 500.0

SAFE_WALL_RANGE_MM = (1.0, 2.0)
TYPICAL_CHAMBER_COUNT = (12, 15)
TYPICAL_CHAMBER_THICKNESS_MM = 5.0


class NoExpansionError(ValueError):
    """Bellow with zero midsection expansion: bend radius is undefined."""


class UnreachableTargetError(ValueError):
    """Per-chamber bend is zero, so no chamber count reaches the target."""


class DegenerateFitError(ValueError):
    """Calibration samples carry no usable pressure/angle signal."""


@dataclass(frozen=True)
class BellowSpec:
    """One chamber: half height, rest width, midsection expansion, wall.

    `expansion_mm` is the midsection growth at `rated_pressure_mbar`.
    """

    half_height_mm: float
    width_mm: float
    expansion_mm: float
    wall_mm: float = 1.5
    rated_pressure_mbar: float = DEFAULT_RATED_PRESSURE_MBAR

    def __post_init__(self):
        if not self.half_height_mm > 0:
            raise ValueError(f"half_height_mm must be > 0, got {self.half_height_mm}")
        if not self.width_mm > 0:
            raise ValueError(f"width_mm must be > 0, got {self.width_mm}")
        if self.expansion_mm < 0:
            raise ValueError(f"expansion_mm must be >= 0, got {self.expansion_mm}")
        if not self.wall_mm > 0:
            raise ValueError(f"wall_mm must be > 0, got {self.wall_mm}")
        if not self.rated_pressure_mbar > 0:
            raise ValueError(
                f"rated_pressure_mbar must be > 0, got {self.rated_pressure_mbar}"
            )


@dataclass(frozen=True)
class ActuatorSpec:
    """A chamber series: the bellow, how many, and each chamber's thickness."""

    bellow: BellowSpec
    chamber_count: int
    chamber_thickness_mm: float

    def __post_init__(self):
        if self.chamber_count < 1:
            raise ValueError(f"chamber_count must be >= 1, got {self.chamber_count}")
        if not self.chamber_thickness_mm > 0:
            raise ValueError(
                f"chamber_thickness_mm must be > 0, got {self.chamber_thickness_mm}"
            )


@dataclass(frozen=True)
class CalibrationCurve:
    """Through-origin linear pressure->angle map with a command ceiling."""

    slope_deg_per_mbar: float
    max_pressure_mbar: float = DEFAULT_MAX_PRESSURE_MBAR

    def __post_init__(self):
        if not self.slope_deg_per_mbar > 0:
            raise ValueError(
                f"slope_deg_per_mbar must be > 0, got {self.slope_deg_per_mbar}"
            )
        if not 0 < self.max_pressure_mbar <= VALVE_CEILING_MBAR:
            raise ValueError(
                f"max_pressure_mbar must be in (0, {VALVE_CEILING_MBAR}], "
                f"got {self.max_pressure_mbar}"
            )


@dataclass(frozen=True)
class PressureAngleSample:
    pressure_mbar: float
    angle_deg: float

    def __post_init__(self):
        if self.pressure_mbar < 0:
            raise ValueError(f"pressure_mbar must be >= 0, got {self.pressure_mbar}")
        if self.angle_deg < 0:
            raise ValueError(f"angle_deg must be >= 0, got {self.angle_deg}")


def _midsection_half_diagonal(spec: BellowSpec) -> float:
    # sqrt(half_height^2 + (expansion/2)^2): base corner to expanded midsection
    return math.hypot(spec.half_height_mm, spec.expansion_mm / 2.0)


def bend_radius(spec: BellowSpec) -> float:
    """Radius of the internal circle the curled chamber series wraps, mm.

    Sets the smallest object diameter the actuator can close around.
    """
    if spec.expansion_mm == 0:
        raise NoExpansionError(
            "no expansion: expansion_mm = 0 gives an unbent actuator "
            "(infinite bend radius)"
        )
    return spec.width_mm * _midsection_half_diagonal(spec) / spec.expansion_mm


def bend_angle_per_chamber(spec: BellowSpec) -> float:
    """Bend angle contributed by one pressurized chamber, degrees."""
    if spec.expansion_mm == 0:
        return 0.0
    ratio = spec.expansion_mm / (2.0 * _midsection_half_diagonal(spec))
    return math.degrees(2.0 * math.asin(ratio))


def chambers_for_angle(spec: BellowSpec, target_deg: float) -> int:
    """Smallest chamber count whose summed per-chamber bend reaches the target."""
    if not target_deg > 0:
        raise ValueError(f"target_deg must be > 0, got {target_deg}")
    per = bend_angle_per_chamber(spec)
    if per == 0.0:
        raise UnreachableTargetError(
            "unreachable target: per-chamber bend angle is 0 (no expansion)"
        )
    n = max(1, math.ceil(target_deg / per))
    # guard float rounding so n*per >= target and (n-1)*per < target hold exactly
    while n * per < target_deg:
        n += 1
    while n > 1 and (n - 1) * per >= target_deg:
        n -= 1
    return n


def pressure_to_angle(curve: CalibrationCurve, pressure_mbar: float) -> float:
    """Bend angle for a commanded pressure, clamped at the curve ceiling."""
    if pressure_mbar < 0:
        raise ValueError(f"pressure_mbar must be >= 0, got {pressure_mbar}")
    return curve.slope_deg_per_mbar * min(pressure_mbar, curve.max_pressure_mbar)


def angle_to_pressure(curve: CalibrationCurve, angle_deg: float) -> float:
    """Pressure that produces a bend angle; inverse of pressure_to_angle below the clamp."""
    if angle_deg < 0:
        raise ValueError(f"angle_deg must be >= 0, got {angle_deg}")
    return min(angle_deg / curve.slope_deg_per_mbar, curve.max_pressure_mbar)


def fit_calibration(
    samples: Sequence[PressureAngleSample],
    max_pressure_mbar: float = DEFAULT_MAX_PRESSURE_MBAR,
) -> CalibrationCurve:
    """Least-squares through-origin fit: slope = sum(p*theta) / sum(p^2).

    Through-origin because zero pressure is the depressurized rest state.
    """
    if len(samples) < 2:
        raise ValueError(f"need at least 2 samples, got {len(samples)}")
    denom = sum(s.pressure_mbar * s.pressure_mbar for s in samples)
    if denom == 0.0:
        raise DegenerateFitError("degenerate fit: all sample pressures are zero")
    slope = sum(s.pressure_mbar * s.angle_deg for s in samples) / denom
    if slope <= 0.0:
        raise DegenerateFitError(
            f"degenerate fit: fitted slope {slope} is not positive"
        )
    return CalibrationCurve(slope, max_pressure_mbar)


def fit_residual_rms(curve: CalibrationCurve, samples: Iterable[PressureAngleSample]) -> float:
    """RMS of angle residuals against the fitted line, degrees."""
    sq = [
        (s.angle_deg - curve.slope_deg_per_mbar * s.pressure_mbar) ** 2
        for s in samples
    ]
    if not sq:
        raise ValueError("need at least one sample")
    return math.sqrt(sum(sq) / len(sq))


@dataclass(frozen=True)
class Finding:
    """One design-check result: hard violation or soft warning."""

    severity: str  # "violation" | "warning"
    field: str
    message: str


def validate_spec(spec: ActuatorSpec) -> list[Finding]:
    """Check an actuator design against the validated operating envelope.

    Wall thickness outside [1, 2] mm is a hard violation (rupture when too
    thin, no deformation when too thick). Chamber count and thickness away
    from the tested values are soft warnings.
    """
    findings: list[Finding] = []
    lo, hi = SAFE_WALL_RANGE_MM
    wall = spec.bellow.wall_mm
    if not lo <= wall <= hi:
        reason = "can rupture" if wall < lo else "may not deform"
        findings.append(
            Finding(
                "violation",
                "wall_mm",
                f"wall {wall} mm outside safe range [{lo}, {hi}] mm ({reason})",
            )
        )
    clo, chi = TYPICAL_CHAMBER_COUNT
    if not clo <= spec.chamber_count <= chi:
        findings.append(
            Finding(
                "warning",
                "chamber_count",
                f"chamber count {spec.chamber_count} outside the validated "
                f"{clo}-{chi} range",
            )
        )
    if spec.chamber_thickness_mm != TYPICAL_CHAMBER_THICKNESS_MM:
        findings.append(
            Finding(
                "warning",
                "chamber_thickness_mm",
                f"chamber thickness {spec.chamber_thickness_mm} mm differs from "
                f"the validated {TYPICAL_CHAMBER_THICKNESS_MM} mm operating point",
            )
        )
    return findings
