"""Motion-capture and precision-balance emulation.

Mocap: two markers ``marker_separation`` mm apart ride on the gimbal ring;
every frame each marker is displaced transversely by Gaussian noise and the
angle is recovered from the marker segment. Balance: the gimbal stand sits
on the pan, so upward thrust lowers the reading; where the force acts on
the stand does not matter.
"""
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MocapConfig:
    frame_rate: float = 240.0
    marker_separation: float = 40.0
    marker_position_sd: float = 0.05

    UNITS = {"frame_rate": "Hz", "marker_separation": "mm", "marker_position_sd": "mm"}

    def __post_init__(self):
        if not (self.frame_rate > 0 and self.marker_separation > 0):
            raise ValueError("frame_rate and marker_separation must be positive")
        if self.marker_position_sd < 0:
            raise ValueError("marker_position_sd must be >= 0")

    @property
    def frame_angle_sd(self):
        """Per-frame angle SD (rad) from two independent transverse errors."""
        return math.sqrt(2.0) * self.marker_position_sd / self.marker_separation


@dataclass(frozen=True)
class BalanceConfig:
    report_rate: float = 10.0
    reading_sd: float = 0.1
    tare: float = 0.0
    supported_weight: float = 1500.0

    UNITS = {"report_rate": "Hz", "reading_sd": "mg", "tare": "mg", "supported_weight": "mg"}

    def __post_init__(self):
        if not self.report_rate > 0:
            raise ValueError("report_rate must be positive")
        if self.reading_sd < 0:
            raise ValueError("reading_sd must be >= 0")


@dataclass(frozen=True)
class SensorStream:
    timestamps: np.ndarray
    values: np.ndarray
    unit: str

    def mean(self):
        return float(np.mean(self.values))


def frame_times(rate, t_start, t_end):
    n = int(round(rate * (t_end - t_start)))
    return t_start + np.arange(n) / rate


def angle_from_markers(marker_a, marker_b, nominal=0.0):
    """Angle (rad) of segment a->b relative to its nominal heading ``nominal``."""
    dx = marker_b[0] - marker_a[0]
    dy = marker_b[1] - marker_a[1]
    if dx == 0 and dy == 0:
        raise ValueError("markers coincide; angle undefined")
    ang = math.atan2(dy, dx) - nominal
    return math.atan2(math.sin(ang), math.cos(ang)) if abs(ang) > math.pi else ang


def marker_positions(theta, separation, noise_a=0.0, noise_b=0.0):
    """Marker coordinates (mm) for ring angle ``theta`` plus transverse offsets."""
    c, s = math.cos(theta), math.sin(theta)
    h = 0.5 * separation
    a = (-h * c - noise_a * s, -h * s + noise_a * c)
    b = (h * c - noise_b * s, h * s + noise_b * c)
    return a, b


def _sample(signal, times):
    if callable(signal):
        return np.broadcast_to(np.asarray(signal(times), dtype=float), times.shape).copy()
    if isinstance(signal, tuple):
        t, v = signal
        t = np.asarray(t, dtype=float)
        if times.size and (times[0] < t[0] - 1e-12 or times[-1] > t[-1] + 1e-12):
            raise ValueError("trajectory does not cover the requested window")
        return np.interp(times, t, np.asarray(v, dtype=float))
    return np.full(times.shape, float(signal))


def mocap_stream(true_angle, cfg, rng, t_start, t_end):
    """Sample an axis angle at the mocap frame rate with marker noise.

    ``true_angle`` is a constant, a callable of time, or a ``(times, theta)``
    pair that is linearly interpolated. The recovered angle equals the
    marker-segment heading: theta + atan((n_b - n_a) / d). With zero noise the
    draw is skipped and the truth is returned unchanged.
    """
    times = frame_times(cfg.frame_rate, t_start, t_end)
    theta = _sample(true_angle, times)
    if cfg.marker_position_sd > 0:
        noise = rng.normal(0.0, cfg.marker_position_sd, size=(2, times.size))
        theta = theta + np.arctan2(noise[1] - noise[0], cfg.marker_separation)
    return SensorStream(times, theta, "rad")


def balance_stream(thrust, cfg, rng, t_start, t_end):
    """Balance readings (mg) = tare + supported weight - thrust + noise."""
    times = frame_times(cfg.report_rate, t_start, t_end)
    values = cfg.tare + cfg.supported_weight - _sample(thrust, times)
    if cfg.reading_sd > 0:
        values = values + rng.normal(0.0, cfg.reading_sd, size=times.size)
    return SensorStream(times, values, "mg")


def write_balance_log(stream, path):
    """Line-per-reading log emulating the balance's serial feed."""
    with open(path, "w") as fh:
        fh.write("t_seconds,reading_mg\n")
        for t, v in zip(stream.timestamps, stream.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
