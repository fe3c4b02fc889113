"""Pure-Python/NumPy twin of ``_kernels.pyx``; same signatures and results."""
import numpy as np

HALF_PI = np.pi / 2.0


def _accel(th, om, tau, inv_i, k_grav, k_flex, damp):
    return (tau - k_grav * np.sin(th) - k_flex * th - damp * om) * inv_i


def integrate_constant(inertia, k_grav, k_flex, damping, torque, theta0, omega0,
                       dt, n_steps, record_from=0):
    inv_i = 1.0 / np.asarray(inertia, dtype=float)
    k_grav = np.asarray(k_grav, dtype=float)
    k_flex = np.asarray(k_flex, dtype=float)
    damp = np.asarray(damping, dtype=float)
    tau = np.asarray(torque, dtype=float)
    th = np.array(theta0, dtype=float)
    om = np.array(omega0, dtype=float)
    n = th.shape[0]
    if record_from < 0 or record_from > n_steps:
        raise ValueError("record_from must lie in [0, n_steps]")
    rec = np.full((n, n_steps - record_from + 1), np.nan)
    div = np.full(n, -1, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    h2 = 0.5 * dt
    if record_from == 0:
        rec[:, 0] = th
    for i in range(1, n_steps + 1):
        k1t = om
        k1w = _accel(th, om, tau, inv_i, k_grav, k_flex, damp)
        k2t = om + h2 * k1w
        k2w = _accel(th + h2 * k1t, k2t, tau, inv_i, k_grav, k_flex, damp)
        k3t = om + h2 * k2w
        k3w = _accel(th + h2 * k2t, k3t, tau, inv_i, k_grav, k_flex, damp)
        k4t = om + dt * k3w
        k4w = _accel(th + dt * k3t, k4t, tau, inv_i, k_grav, k_flex, damp)
        new_th = th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        new_om = om + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        th = np.where(alive, new_th, th)
        om = np.where(alive, new_om, om)
        if i >= record_from:
            rec[alive, i - record_from] = th[alive]
        bad = alive & ~(np.abs(th) <= HALF_PI)
        if bad.any():
            div[bad] = i
            alive &= ~bad
            if not alive.any():
                break
    return rec, th, om, div


def integrate_sampled(inertia, k_grav, k_flex, damping, torque_half, theta0, omega0, dt, n_steps):
    tq = np.asarray(torque_half, dtype=float)
    if tq.shape[0] != 2 * n_steps + 1:
        raise ValueError("torque_half must have 2 * n_steps + 1 samples")
    from math import sin
    inv_i = 1.0 / inertia
    h2 = 0.5 * dt
    th_a = np.full(n_steps + 1, np.nan)
    om_a = np.full(n_steps + 1, np.nan)
    th, om = float(theta0), float(omega0)
    th_a[0], om_a[0] = th, om
    tql = tq.tolist()

    def acc(t, w, tau):
        return (tau - k_grav * sin(t) - k_flex * t - damping * w) * inv_i

    for i in range(n_steps):
        k1t = om
        k1w = acc(th, om, tql[2 * i])
        k2t = om + h2 * k1w
        k2w = acc(th + h2 * k1t, k2t, tql[2 * i + 1])
        k3t = om + h2 * k2w
        k3w = acc(th + h2 * k2t, k3t, tql[2 * i + 1])
        k4t = om + dt * k3w
        k4w = acc(th + dt * k3t, k4t, tql[2 * i + 2])
        th = th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        om = om + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        th_a[i + 1] = th
        om_a[i + 1] = om
        if not abs(th) <= HALF_PI:
            return th_a, om_a, i + 1
    return th_a, om_a, -1
