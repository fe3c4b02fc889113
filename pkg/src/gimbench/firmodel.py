"""Ground-truth flapping-wing robot: drive command -> stroke-averaged wrench.

The model is affine in (V_o, dA) with small optional cross-coupling, an
optional cubic saturation on each own-axis command, two noise regimes and a
linear wear drift of the torque biases with cumulative flapping time.
"""
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import InfeasibleCommandError
from .signalgen import rail_feasible
from .units import G_STANDARD, weight_torque_unm


@dataclass(frozen=True)
class FirCharacter:
    """Robot parameters in lab units (uNm, V, mg-force, s)."""

    pitch_slope: float = 0.13
    roll_slope: float = 0.49
    pitch_bias: float = 0.0
    roll_bias: float = 0.0
    thrust_at_baseline: float = 180.0
    thrust_pitch_slope: float = 0.0
    thrust_roll_slope: float = 0.0
    coupling_roll_to_pitch: float = 0.0
    coupling_pitch_to_roll: float = 0.0
    inner_noise_sd_pitch: float = 0.0
    inner_noise_sd_roll: float = 0.0
    extreme_noise_sd_pitch: float = 0.0
    extreme_noise_sd_roll: float = 0.0
    thrust_noise_sd: float = 0.0
    extreme_threshold_fraction: float = 1.0
    pitch_range: float = 15.0
    roll_range: float = 25.0
    wear_drift_rate_pitch: float = 0.0
    wear_drift_rate_roll: float = 0.0
    cubic_coeff: float = 0.0
    thrust_scale: float = 1.0
    mass: float = 180.0

    UNITS = {
        "pitch_slope": "uNm_per_V",
        "roll_slope": "uNm_per_V",
        "pitch_bias": "uNm",
        "roll_bias": "uNm",
        "thrust_at_baseline": "mg",
        "thrust_pitch_slope": "mg_per_V",
        "thrust_roll_slope": "mg_per_V",
        "coupling_roll_to_pitch": "uNm_per_V",
        "coupling_pitch_to_roll": "uNm_per_V",
        "inner_noise_sd_pitch": "uNm",
        "inner_noise_sd_roll": "uNm",
        "extreme_noise_sd_pitch": "uNm",
        "extreme_noise_sd_roll": "uNm",
        "thrust_noise_sd": "mg",
        "extreme_threshold_fraction": "",
        "pitch_range": "V",
        "roll_range": "V",
        "wear_drift_rate_pitch": "uNm_per_s",
        "wear_drift_rate_roll": "uNm_per_s",
        "cubic_coeff": "uNm_per_V3",
        "thrust_scale": "",
        "mass": "mg",
    }

    def __post_init__(self):
        if not (self.pitch_slope > 0 and self.roll_slope > 0):
            raise ValueError("torque slopes must be positive")
        if not self.thrust_at_baseline > 0:
            raise ValueError("thrust_at_baseline must be positive")
        sds = (self.inner_noise_sd_pitch, self.inner_noise_sd_roll,
               self.extreme_noise_sd_pitch, self.extreme_noise_sd_roll,
               self.thrust_noise_sd)
        if min(sds) < 0:
            raise ValueError("noise standard deviations must be >= 0")
        if (self.extreme_noise_sd_pitch < self.inner_noise_sd_pitch
                or self.extreme_noise_sd_roll < self.inner_noise_sd_roll):
            raise ValueError("extreme_noise_sd must be >= inner_noise_sd on each axis")
        if not 0 < self.extreme_threshold_fraction <= 1:
            raise ValueError("extreme_threshold_fraction must lie in (0, 1]")
        if not (self.pitch_range > 0 and self.roll_range > 0):
            raise ValueError("command ranges must be positive")

    def noiseless(self):
        return replace(self, inner_noise_sd_pitch=0.0, inner_noise_sd_roll=0.0,
                       extreme_noise_sd_pitch=0.0, extreme_noise_sd_roll=0.0,
                       thrust_noise_sd=0.0)

    def with_coupling(self, value):
        return replace(self, coupling_roll_to_pitch=value, coupling_pitch_to_roll=value)

    def is_extreme(self, offset_voltage, amplitude_difference):
        frac = self.extreme_threshold_fraction
        eps = 1e-9
        return (abs(offset_voltage) >= frac * self.pitch_range - eps
                or abs(amplitude_difference) >= frac * self.roll_range - eps)


@dataclass(frozen=True)
class OffsetLoad:
    """Point mass on a rod; mass in mg, lever in mm, ``sign`` is +1 or -1."""

    mass: float
    lever: float
    axis: str
    sign: int = 1

    def __post_init__(self):
        if self.mass < 0 or self.lever < 0:
            raise ValueError("mass and lever must be non-negative")
        if self.axis not in ("pitch", "roll"):
            raise ValueError(f"axis must be 'pitch' or 'roll', got {self.axis!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class WearState:
    """Accumulated flapping time and the bias drift it has produced (uNm)."""

    flap_time: float = 0.0
    drift_pitch: float = 0.0
    drift_roll: float = 0.0


class Wrench(NamedTuple):
    pitch: float
    roll: float
    thrust: float


def offset_torque(load, g=G_STANDARD):
    """Static torque (uNm) applied by an offset load."""
    return load.sign * weight_torque_unm(load.mass, load.lever, g)


def advance_wear(char, flap_seconds, state=None):
    """Accumulate ``flap_seconds`` of flapping onto ``state``."""
    if flap_seconds < 0:
        raise ValueError("flap_seconds must be >= 0")
    state = state or WearState()
    return WearState(
        flap_time=state.flap_time + flap_seconds,
        drift_pitch=state.drift_pitch + char.wear_drift_rate_pitch * flap_seconds,
        drift_roll=state.drift_roll + char.wear_drift_rate_roll * flap_seconds,
    )


def stroke_avg_wrench(char, cmd, flap_time_so_far=0.0, rng: Optional[np.random.Generator] = None,
                      margin=0.0):
    """Stroke-averaged (pitch uNm, roll uNm, thrust mg-force) for ``cmd``.

    When ``rng`` is given, exactly three normal variates are drawn (pitch,
    roll, thrust) regardless of the noise levels, so streams stay aligned.
    """
    if flap_time_so_far < 0:
        raise ValueError("flap_time_so_far must be >= 0")
    check = rail_feasible(cmd, margin)
    if not check.feasible:
        raise InfeasibleCommandError(
            f"command exceeds the {cmd.bias_voltage} V rail (extremum {check.extremum:.2f} V)"
        )
    vo = cmd.offset_voltage
    da = cmd.amplitude_difference
    c3 = char.cubic_coeff
    pitch = (char.pitch_slope * vo - c3 * vo ** 3 + char.pitch_bias
             + char.coupling_roll_to_pitch * da
             + char.wear_drift_rate_pitch * flap_time_so_far)
    roll = (char.roll_slope * da - c3 * da ** 3 + char.roll_bias
            + char.coupling_pitch_to_roll * vo
            + char.wear_drift_rate_roll * flap_time_so_far)
    thrust = char.thrust_scale * (char.thrust_at_baseline + char.thrust_pitch_slope * vo
                                  + char.thrust_roll_slope * da)
    if rng is not None:
        e = rng.standard_normal(3)
        if char.is_extreme(vo, da):
            sp, sr = char.extreme_noise_sd_pitch, char.extreme_noise_sd_roll
        else:
            sp, sr = char.inner_noise_sd_pitch, char.inner_noise_sd_roll
        pitch += sp * e[0]
        roll += sr * e[1]
        thrust += char.thrust_noise_sd * e[2]
    return Wrench(float(pitch), float(roll), float(thrust))
