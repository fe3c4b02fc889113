"""Sensor identification: hung-mass stiffness, torque resolution, time constant."""
import math
from dataclasses import dataclass

import numpy as np

from . import gimbalsim
from .errors import FitError
from .firmodel import OffsetLoad, offset_torque
from .units import RAD_PER_DEG
from .virtualsensors import angle_from_markers, marker_positions, mocap_stream

# Six hung masses at 10 mm, both directions: +-0.67, +-1.33, +-2.0 uNm.
DEFAULT_LOADS = tuple(
    OffsetLoad(mass=m, lever=10.0, axis="roll", sign=s)
    for m in (6.8, 13.6, 20.4) for s in (1, -1)
)


@dataclass(frozen=True)
class CalibrationPoint:
    applied_torque: float  # uNm
    measured_angle: float  # rad
    axis: str

    def __post_init__(self):
        if not (math.isfinite(self.applied_torque) and math.isfinite(self.measured_angle)):
            raise ValueError("calibration values must be finite")


@dataclass(frozen=True)
class StiffnessFit:
    k_s: float  # uNm/rad
    intercept: float  # uNm
    r_squared: float
    n_points: int

    @property
    def k_s_per_deg(self):
        return self.k_s * RAD_PER_DEG


@dataclass(frozen=True)
class TimeConstantFit:
    tau: float
    r_squared: float
    n_points: int
    window: float


def ols_line(x, y):
    """Slope, intercept and R^2 of an ordinary least-squares line y ~ x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise FitError("regressor has zero variance")
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    ss_tot = np.sum((y - ym) ** 2)
    ss_res = np.sum((y - intercept - slope * x) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(min(max(r2, 0.0), 1.0))


def calibrate_stiffness(points):
    """Regress applied torque on measured angle; the slope is k_s."""
    points = list(points)
    if len(points) < 3:
        raise FitError(f"need at least 3 calibration points, got {len(points)}")
    if len({p.axis for p in points}) > 1:
        raise FitError("calibration points mix axes")
    tau = np.array([p.applied_torque for p in points])
    if not (np.any(tau > 0) and np.any(tau < 0)):
        raise FitError("calibration loads must span both directions")
    slope, intercept, r2 = ols_line([p.measured_angle for p in points], tau)
    return StiffnessFit(k_s=slope, intercept=intercept, r_squared=r2, n_points=len(points))


def marker_angular_resolution(mocap_cfg):
    """Angle seen when the two markers move transversely by +sd and -sd."""
    sd = mocap_cfg.marker_position_sd
    a, b = marker_positions(0.0, mocap_cfg.marker_separation, -sd, sd)
    return angle_from_markers(a, b)


def resolution_budget(k_s, angular_resolution):
    """Smallest resolvable torque (uNm) for stiffness k_s (uNm/rad)."""
    if not (k_s > 0 and angular_resolution > 0):
        raise ValueError("k_s and angular_resolution must be positive")
    return k_s * angular_resolution


def bandwidth_from_tau(tau_c):
    if not tau_c > 0:
        raise ValueError("time constant must be positive")
    return 1.0 / (2.0 * math.pi * tau_c)


def fit_time_constant(trace, threshold=0.05):
    """Dominant time constant of a free decay.

    Fits log|theta| against time over the leading stretch where |theta| stays
    at or above ``threshold`` times the initial magnitude.
    """
    t = np.asarray(trace.time, dtype=float)
    th = np.asarray(trace.theta, dtype=float)
    if th.size < 3 or th[0] == 0:
        raise FitError("trace starts at zero; nothing to fit")
    sign0 = np.sign(th[0])
    if np.any(np.sign(th[th != 0]) != sign0):
        raise FitError("trace crosses zero: underdamped decay, no single time constant")
    mag = np.abs(th)
    below = np.nonzero(mag < threshold * mag[0])[0]
    end = below[0] if below.size else mag.size
    if end < 3:
        raise FitError("decay window too short")
    tw, yw = t[:end], np.log(mag[:end])
    slope, _, r2 = ols_line(tw, yw)
    if not slope < 0:
        raise FitError("trace does not decay")
    tau = -1.0 / slope
    window = tw[-1] - tw[0]
    if window < 2.0 * tau:
        raise FitError(f"only {window:.2f} s of decay for tau = {tau:.2f} s; need two time constants")
    return TimeConstantFit(tau=float(tau), r_squared=r2, n_points=int(end), window=float(window))


def hung_mass_calibration(params, axis, mocap_cfg, rng, loads=DEFAULT_LOADS,
                          settle=30.0, window=0.5, dt=1e-3, g=None):
    """Hang each load on the simulated axis, read the mocap angle, fit k_s.

    Each load is held for ``settle`` seconds from rest; the mocap angle is
    averaged over the last ``window`` seconds.
    """
    g = params.gravity if g is None else g
    torques = [offset_torque(load, g) for load in loads]
    times, theta = gimbalsim.hold_constant_torques(
        [params] * len(torques), torques, settle, dt, window)
    points = []
    for i, tau in enumerate(torques):
        stream = mocap_stream((times, theta[i]), mocap_cfg, rng, settle - window, settle)
        points.append(CalibrationPoint(tau, stream.mean(), axis))
    return points, calibrate_stiffness(points)


def calibration_report(fits, angular_resolution):
    """JSON-ready per-axis calibration summary."""
    out = {}
    for axis, fit in fits.items():
        out[axis] = {
            "k_s_uNm_per_rad": fit.k_s,
            "k_s_uNm_per_deg": fit.k_s_per_deg,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "n_points": fit.n_points,
            "resolution_uNm": resolution_budget(fit.k_s, angular_resolution),
        }
    return out
