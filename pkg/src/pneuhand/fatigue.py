"""Actuator fatigue harness: cycle one channel between rest and a target
pressure, tracking whether every cycle's peak reaches 95% of the command.

Two drive modes: `simulated` steps the first-order valve model on a
virtual clock (hours of test in well under a minute), `live` paces real
Modbus writes against a terminal and samples its actual pressures.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .teleop import RateScheduler
from .valves import (
    DEFAULT_TAU_S,
    N_CHANNELS,
    PRESSURE_CEILING_MBAR,
    ValveClient,
    ValveDynamics,
    step_dynamics,
)

PASS_FRACTION = 0.95
DEFAULT_PRESSURE_MBAR = 400.0
DEFAULT_CPM = 20.0
DEFAULT_DURATION_S = 7200.0


@dataclass
class FatigueReport:
    """One fatigue run: cycle counts, per-cycle peak stats, verdict."""

    channel: int
    target_cycles: int
    cycles_completed: int = 0
    pressure_mbar: float = DEFAULT_PRESSURE_MBAR
    cycles_per_minute: float = DEFAULT_CPM
    duration_s: float = DEFAULT_DURATION_S
    threshold_mbar: float = 0.0
    peak_min_mbar: float = 0.0
    peak_mean_mbar: float = 0.0
    peak_max_mbar: float = 0.0
    cycles_below_threshold: int = 0
    simulated: bool = True
    passed: bool = False

    def finalize(self, peaks: list[float]) -> "FatigueReport":
        if peaks:
            self.peak_min_mbar = float(min(peaks))
            self.peak_mean_mbar = float(np.mean(peaks))
            self.peak_max_mbar = float(max(peaks))
        self.cycles_below_threshold = sum(1 for p in peaks if p < self.threshold_mbar)
        self.cycles_completed = len(peaks)
        self.passed = (
            self.cycles_completed == self.target_cycles and self.cycles_below_threshold == 0
        )
        return self

    def to_dict(self) -> dict:
        return {
            "channel": self.channel,
            "target_cycles": self.target_cycles,
            "cycles_completed": self.cycles_completed,
            "pressure_mbar": self.pressure_mbar,
            "cycles_per_minute": self.cycles_per_minute,
            "duration_s": self.duration_s,
            "threshold_mbar": self.threshold_mbar,
            "peak_min_mbar": self.peak_min_mbar,
            "peak_mean_mbar": self.peak_mean_mbar,
            "peak_max_mbar": self.peak_max_mbar,
            "cycles_below_threshold": self.cycles_below_threshold,
            "simulated": self.simulated,
            "passed": self.passed,
        }


def cycle_count(duration_s: float, cycles_per_minute: float) -> int:
    """Exact whole cycles fitting the duration: floor(duration * cpm / 60)."""
    return math.floor(duration_s * cycles_per_minute / 60.0 + 1e-9)


def _validate(channel: int, pressure_mbar: float, cpm: float, duration_s: float) -> None:
    if not 0 <= channel < N_CHANNELS:
        raise ValueError(f"channel {channel} outside 0..{N_CHANNELS - 1}")
    if not 0 < pressure_mbar <= PRESSURE_CEILING_MBAR:
        raise ValueError(f"pressure {pressure_mbar} outside (0, {PRESSURE_CEILING_MBAR}] mbar")
    if not cpm > 0 or not duration_s > 0:
        raise ValueError("cycle rate and duration must be > 0")


def run_fatigue_simulated(
    channel: int,
    pressure_mbar: float = DEFAULT_PRESSURE_MBAR,
    cycles_per_minute: float = DEFAULT_CPM,
    duration_s: float = DEFAULT_DURATION_S,
    tau_s: float = DEFAULT_TAU_S,
) -> FatigueReport:
    """Run the cycle protocol on a virtual clock against the valve model.

    Each cycle inflates for half the period and vents for the other half;
    the exact exponential step makes one update per half-cycle sufficient,
    and the peak sits at the end of the inflate phase (monotone response).
    """
    _validate(channel, pressure_mbar, cycles_per_minute, duration_s)
    report = FatigueReport(
        channel=channel,
        target_cycles=cycle_count(duration_s, cycles_per_minute),
        pressure_mbar=pressure_mbar,
        cycles_per_minute=cycles_per_minute,
        duration_s=duration_s,
        threshold_mbar=PASS_FRACTION * pressure_mbar,
        simulated=True,
    )
    half_s = 60.0 / cycles_per_minute / 2.0
    state = ValveDynamics.at_rest(tau_s)
    commanded_on = np.zeros(N_CHANNELS)
    commanded_on[channel] = pressure_mbar
    commanded_off = np.zeros(N_CHANNELS)
    peaks: list[float] = []
    for _ in range(report.target_cycles):
        state = step_dynamics(
            ValveDynamics(commanded_on, state.actual_mbar, tau_s), half_s
        )
        peaks.append(float(state.actual_mbar[channel]))
        state = step_dynamics(
            ValveDynamics(commanded_off, state.actual_mbar, tau_s), half_s
        )
    return report.finalize(peaks)


def run_fatigue_live(
    client: ValveClient,
    channel: int,
    pressure_mbar: float = DEFAULT_PRESSURE_MBAR,
    cycles_per_minute: float = DEFAULT_CPM,
    duration_s: float = DEFAULT_DURATION_S,
    sample_hz: float = 20.0,
) -> FatigueReport:
    """Run the cycle protocol against a live terminal, wall-clock paced."""
    _validate(channel, pressure_mbar, cycles_per_minute, duration_s)
    report = FatigueReport(
        channel=channel,
        target_cycles=cycle_count(duration_s, cycles_per_minute),
        pressure_mbar=pressure_mbar,
        cycles_per_minute=cycles_per_minute,
        duration_s=duration_s,
        threshold_mbar=PASS_FRACTION * pressure_mbar,
        simulated=False,
    )
    half_s = 60.0 / cycles_per_minute / 2.0
    scheduler = RateScheduler(sample_hz)
    peaks: list[float] = []
    for _ in range(report.target_cycles):
        for target, track_peak in ((pressure_mbar, True), (0.0, False)):
            client.write_single(channel, target)
            peak = 0.0
            phase_end = time.perf_counter() + half_s
            while time.perf_counter() < phase_end:
                scheduler.sleep()
                actual = client.read_actual(channel, 1)[0]
                peak = max(peak, actual)
            if track_peak:
                peaks.append(peak)
    return report.finalize(peaks)
