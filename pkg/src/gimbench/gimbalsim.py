"""One-axis gimbal dynamics, static deflection and step responses.

Each axis obeys

    tau = m_b g l_b sin(th) - m_R g l_R sin(th) + k_f th + b th' + I th''

Parameters are stored in lab units; every integration converts to SI first.
Pitch and roll are independent systems of this form.
"""
import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DivergenceError, NonlinearityWarning
from .units import DEG_PER_RAD, G_STANDARD, MG, MG_MM2, MM, RAD_PER_DEG, UNM

AXES = ("pitch", "roll")


@dataclass(frozen=True)
class GimbalParams:
    """Physical constants of one gimbal axis.

    Units: masses mg, lengths mm, stiffness uNm/rad, damping uNm*s/rad,
    inertia mg*mm^2, gravity m/s^2.
    """

    counterweight_mass: float = 50.0
    counterweight_lever: float = 17.0
    robot_mass: float = 180.0
    robot_com_offset: float = 0.0
    flexure_stiffness: float = 0.0
    damping: float = 0.0
    inertia: float = 1.0e8
    gravity: float = G_STANDARD

    UNITS = {
        "counterweight_mass": "mg",
        "counterweight_lever": "mm",
        "robot_mass": "mg",
        "robot_com_offset": "mm",
        "flexure_stiffness": "uNm_per_rad",
        "damping": "uNm_s_per_rad",
        "inertia": "mg_mm2",
        "gravity": "m_per_s2",
    }

    def __post_init__(self):
        if not self.inertia > 0:
            raise ValueError("inertia must be positive")
        if self.damping < 0 or self.flexure_stiffness < 0:
            raise ValueError("damping and flexure_stiffness must be >= 0")
        if not self.effective_stiffness_si() > 0:
            raise ValueError("effective stiffness must be positive (theta=0 unstable)")

    # SI views
    def k_grav_si(self):
        """Net gravity coefficient on sin(theta), N*m/rad."""
        g = self.gravity
        return (self.counterweight_mass * MG * g * self.counterweight_lever * MM
                - self.robot_mass * MG * g * self.robot_com_offset * MM)

    def k_flex_si(self):
        return self.flexure_stiffness * UNM

    def damping_si(self):
        return self.damping * UNM

    def inertia_si(self):
        return self.inertia * MG_MM2

    def effective_stiffness_si(self):
        return self.k_grav_si() + self.k_flex_si()


@dataclass(frozen=True)
class GimbalState:
    theta: float = 0.0
    theta_dot: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class AxisTrajectory:
    time: np.ndarray
    theta: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        if not (len(self.time) == len(self.theta) == len(self.torque)):
            raise ValueError("trajectory arrays must have equal length")
        if len(self.time) > 1 and not np.all(np.diff(self.time) > 0):
            raise ValueError("trajectory time grid must be strictly increasing")


def design_axis(total_stiffness, time_constant=3.5, pole_ratio=10.0,
                counterweight_mass=50.0, counterweight_lever=17.0, robot_mass=180.0,
                gravity=G_STANDARD):
    """Build an overdamped axis with a given total stiffness and slow time constant.

    ``total_stiffness`` is in uNm/rad. The flexure stiffness makes up the
    difference left by the counterweight; damping and inertia are chosen so
    the linearised poles sit at ``1/time_constant`` and ``pole_ratio`` times
    that.
    """
    if pole_ratio <= 1:
        raise ValueError("pole_ratio must exceed 1 for an overdamped axis")
    k_grav = counterweight_mass * MG * gravity * counterweight_lever * MM / UNM
    k_flex = total_stiffness - k_grav
    if k_flex < 0:
        raise ValueError("counterweight alone is stiffer than the requested total")
    slow = 1.0 / time_constant
    fast = pole_ratio * slow
    k_si = total_stiffness * UNM
    inertia_si = k_si / (slow * fast)
    damping_si = inertia_si * (slow + fast)
    return GimbalParams(
        counterweight_mass=counterweight_mass,
        counterweight_lever=counterweight_lever,
        robot_mass=robot_mass,
        robot_com_offset=0.0,
        flexure_stiffness=k_flex,
        damping=damping_si / UNM,
        inertia=inertia_si / MG_MM2,
        gravity=gravity,
    )


def total_stiffness(p):
    """k_s = m_b g l_b + k_f in uNm/rad (the robot offset term is neglected)."""
    return (p.counterweight_mass * MG * p.gravity * p.counterweight_lever * MM) / UNM \
        + p.flexure_stiffness


def linear_poles(p):
    """Roots of I s^2 + b s + k_eff = 0 (rad/s), slow pole first."""
    i, b, k = p.inertia_si(), p.damping_si(), p.effective_stiffness_si()
    disc = b * b - 4.0 * i * k
    if disc >= 0:
        r = math.sqrt(disc)
        return (-b + r) / (2 * i), (-b - r) / (2 * i)
    r = math.sqrt(-disc)
    return complex(-b / (2 * i), r / (2 * i)), complex(-b / (2 * i), -r / (2 * i))


def is_overdamped(p):
    return p.damping_si() ** 2 > 4.0 * p.inertia_si() * p.effective_stiffness_si()


def dominant_time_constant(p):
    slow = linear_poles(p)[0]
    return -1.0 / (slow.real if isinstance(slow, complex) else slow)


def static_deflection(p, torque, envelope_deg=10.0):
    """Small-angle static angle (rad) for ``torque`` uNm.

    Emits :class:`NonlinearityWarning` when the result leaves the envelope.
    """
    theta = torque / total_stiffness(p)
    if abs(theta) > envelope_deg * RAD_PER_DEG:
        warnings.warn(
            f"static deflection {theta * DEG_PER_RAD:.2f} deg exceeds the "
            f"{envelope_deg} deg small-angle envelope",
            NonlinearityWarning, stacklevel=2,
        )
    return theta


def static_equilibrium(p, torque, tol=1e-15):
    """Exact root of the nonlinear static balance (rad), by Newton iteration."""
    tau = torque * UNM
    kg, kf = p.k_grav_si(), p.k_flex_si()
    th = tau / (kg + kf)
    for _ in range(100):
        f = kg * math.sin(th) + kf * th - tau
        df = kg * math.cos(th) + kf
        step = f / df
        th -= step
        if abs(step) < tol:
            break
    return th


def dynamics_rhs(p, s, torque):
    """Angular acceleration (rad/s^2) for state ``s`` under ``torque`` uNm."""
    return (torque * UNM - p.k_grav_si() * math.sin(s.theta) - p.k_flex_si() * s.theta
            - p.damping_si() * s.theta_dot) / p.inertia_si()


def energy(p, s):
    """Kinetic plus potential energy (J); non-increasing for b >= 0, tau = 0."""
    return (0.5 * p.inertia_si() * s.theta_dot ** 2
            + p.k_grav_si() * (1.0 - math.cos(s.theta))
            + 0.5 * p.k_flex_si() * s.theta ** 2)


def step(p, s, torque, dt):
    """Advance one classical RK4 step. ``torque`` is uNm or a callable of time."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    tau = torque if callable(torque) else (lambda _t: torque)

    def acc(th, om, t):
        return dynamics_rhs(p, GimbalState(th, om, t), tau(t))

    th, om, t = s.theta, s.theta_dot, s.t
    k1t, k1w = om, acc(th, om, t)
    k2t = om + 0.5 * dt * k1w
    k2w = acc(th + 0.5 * dt * k1t, k2t, t + 0.5 * dt)
    k3t = om + 0.5 * dt * k2w
    k3w = acc(th + 0.5 * dt * k2t, k3t, t + 0.5 * dt)
    k4t = om + dt * k3w
    k4w = acc(th + dt * k3t, k4t, t + dt)
    th_new = th + dt / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
    om_new = om + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    if not abs(th_new) < math.pi / 2:
        raise DivergenceError(
            f"|theta| = {abs(th_new):.4f} rad left the model envelope at t = {t + dt:.4f} s"
        )
    return GimbalState(th_new, om_new, t + dt)


def _n_steps(duration, dt):
    if not duration > 0:
        raise ValueError("duration must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return int(round(duration / dt))


def integrate_axis(p, torque, duration, dt=1e-3, theta0=0.0, omega0=0.0):
    """Integrate one axis from (theta0, omega0); ``torque`` is uNm or callable."""
    n = _n_steps(duration, dt)
    t = np.arange(n + 1) * dt
    if callable(torque):
        half = np.arange(2 * n + 1) * (0.5 * dt)
        tq = np.broadcast_to(np.asarray(torque(half), dtype=float), half.shape)
        theta, _, div = kernels.integrate_sampled(
            p.inertia_si(), p.k_grav_si(), p.k_flex_si(), p.damping_si(),
            tq * UNM, theta0, omega0, dt, n)
        applied = np.array(tq[::2])
    else:
        rec, _, _, divs = kernels.integrate_constant(
            [p.inertia_si()], [p.k_grav_si()], [p.k_flex_si()], [p.damping_si()],
            [torque * UNM], [theta0], [omega0], dt, n, 0)
        theta, div = rec[0], int(divs[0])
        applied = np.full(n + 1, float(torque))
    if div >= 0:
        raise DivergenceError(f"|theta| exceeded pi/2 at t = {div * dt:.4f} s")
    return AxisTrajectory(time=t, theta=theta, torque=applied)


def simulate_run(params, torques, duration, dt=1e-3):
    """Integrate each axis in ``params`` from rest under ``torques[axis]``.

    Both arguments are dicts keyed by axis name. Axes are fully independent,
    so a subset may be passed.
    """
    return {axis: integrate_axis(params[axis], torques.get(axis, 0.0), duration, dt)
            for axis in params}


def step_response(p, theta0, duration, dt=1e-3):
    """Free decay from (theta0, 0) with zero applied torque."""
    return integrate_axis(p, 0.0, duration, dt, theta0=theta0)


def hold_constant_torques(params_seq, torques, duration, dt, record_window):
    """Batch of independent axes held at constant torque from rest.

    ``params_seq`` and ``torques`` (uNm) are sequences of equal length.
    Returns ``(times, theta)`` covering the final ``record_window`` seconds,
    with ``theta`` shaped (n_runs, n_samples).
    """
    n = _n_steps(duration, dt)
    start = max(0, n - int(math.ceil(record_window / dt - 1e-9)))
    m = len(params_seq)
    rec, _, _, div = kernels.integrate_constant(
        np.array([p.inertia_si() for p in params_seq]),
        np.array([p.k_grav_si() for p in params_seq]),
        np.array([p.k_flex_si() for p in params_seq]),
        np.array([p.damping_si() for p in params_seq]),
        np.asarray(torques, dtype=float) * UNM,
        np.zeros(m), np.zeros(m), dt, n, start)
    if np.any(div >= 0):
        bad = int(np.argmax(div >= 0))
        raise DivergenceError(
            f"run {bad} left the model envelope at t = {div[bad] * dt:.4f} s "
            f"(torque {torques[bad]:.3f} uNm)")
    times = (start + np.arange(rec.shape[1])) * dt
    return times, rec


def write_trajectories_csv(pitch, roll, path):
    """Dump a two-axis run as (t, theta_pitch, theta_roll, tau_pitch, tau_roll)."""
    if not np.array_equal(pitch.time, roll.time):
        raise ValueError("pitch and roll trajectories must share a time grid")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_seconds", "theta_pitch_rad", "theta_roll_rad",
                    "tau_pitch_uNm", "tau_roll_uNm"])
        for row in zip(pitch.time, pitch.theta, roll.theta, pitch.torque, roll.torque):
            w.writerow([repr(float(x)) for x in row])
