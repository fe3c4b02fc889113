"""Two-wing piezo drive waveforms and the bias-rail constraint.

Each wing's actuator sees a sinusoid around ``V_b/2``. The offset voltage
``V_o`` moves the two means in opposite directions (pitch) and the amplitude
difference ``dA`` splits the baseline amplitude between the wings (roll)::

    v1(t) = V_b/2 - V_o + (A + dA)/2 * sin(2 pi f t)
    v2(t) = V_b/2 + V_o - (A - dA)/2 * sin(2 pi f t)
"""
import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DriveCommand:
    """Actuator command. Voltages in volts, frequency in Hz, duration in s."""

    bias_voltage: float = 250.0
    amplitude: float = 192.0
    amplitude_difference: float = 0.0
    offset_voltage: float = 0.0
    frequency: float = 180.0
    duration: float = 3.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if not self.bias_voltage > 0:
            raise ValueError(f"bias_voltage must be positive, got {self.bias_voltage}")
        if self.amplitude < abs(self.amplitude_difference):
            raise ValueError(
                "amplitude must be >= |amplitude_difference| "
                f"({self.amplitude} < |{self.amplitude_difference}|)"
            )

    def with_trim(self, offset_voltage=None, amplitude_difference=None):
        """Copy of this command with new pitch/roll settings."""
        return DriveCommand(
            bias_voltage=self.bias_voltage,
            amplitude=self.amplitude,
            amplitude_difference=(
                self.amplitude_difference
                if amplitude_difference is None
                else amplitude_difference
            ),
            offset_voltage=self.offset_voltage if offset_voltage is None else offset_voltage,
            frequency=self.frequency,
            duration=self.duration,
        )


@dataclass(frozen=True)
class WaveformSeries:
    sample_rate: float
    samples_v1: np.ndarray
    samples_v2: np.ndarray

    @property
    def times(self):
        return np.arange(len(self.samples_v1)) / self.sample_rate


@dataclass(frozen=True)
class RailCheck:
    """Result of :func:`rail_feasible`.

    ``extremum`` is whichever of ``v_max``/``v_min`` lies farther from the
    rail midpoint, i.e. the worst-case excursion.
    """

    feasible: bool
    extremum: float
    v_max: float
    v_min: float

    def __bool__(self):
        return self.feasible


def drive_voltages(cmd, t):
    """Instantaneous (v1, v2) in volts at time ``t`` (scalar or array)."""
    s = np.sin(2.0 * np.pi * cmd.frequency * np.asarray(t, dtype=float))
    mid = 0.5 * cmd.bias_voltage
    v1 = mid - cmd.offset_voltage + 0.5 * (cmd.amplitude + cmd.amplitude_difference) * s
    v2 = mid + cmd.offset_voltage - 0.5 * (cmd.amplitude - cmd.amplitude_difference) * s
    if np.ndim(v1) == 0:
        return float(v1), float(v2)
    return v1, v2


def rail_feasible(cmd, margin=0.0):
    """Check that both drive voltages stay inside ``[margin, V_b - margin]``.

    Uses the closed-form extrema of the two sinusoids.
    """
    mid = 0.5 * cmd.bias_voltage
    half1 = 0.5 * abs(cmd.amplitude + cmd.amplitude_difference)
    half2 = 0.5 * abs(cmd.amplitude - cmd.amplitude_difference)
    c1 = mid - cmd.offset_voltage
    c2 = mid + cmd.offset_voltage
    v_max = max(c1 + half1, c2 + half2)
    v_min = min(c1 - half1, c2 - half2)
    extremum = v_max if (v_max - mid) >= (mid - v_min) else v_min
    feasible = v_max <= cmd.bias_voltage - margin and v_min >= margin
    return RailCheck(feasible=bool(feasible), extremum=float(extremum),
                     v_max=float(v_max), v_min=float(v_min))


def sample_waveform(cmd, sample_rate=10_000.0):
    """Sample both drive signals on a uniform grid of ``round(rate*duration)`` points."""
    if sample_rate < 2.0 * cmd.frequency:
        raise ValueError(
            f"sample_rate {sample_rate} Hz aliases a {cmd.frequency} Hz drive "
            f"(need >= {2.0 * cmd.frequency} Hz)"
        )
    n = int(round(sample_rate * cmd.duration))
    t = np.arange(n) / sample_rate
    v1, v2 = drive_voltages(cmd, t)
    return WaveformSeries(sample_rate=float(sample_rate),
                          samples_v1=np.atleast_1d(v1), samples_v2=np.atleast_1d(v2))


def write_waveform_csv(series, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "v1_volts", "v2_volts"])
        for t, a, b in zip(series.times, series.samples_v1, series.samples_v2):
            writer.writerow([repr(float(t)), repr(float(a)), repr(float(b))])
