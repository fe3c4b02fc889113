# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 integrators for the one-axis gimbal equation (SI units)."""
import numpy as np
from libc.math cimport sin, fabs, NAN

cdef double HALF_PI = 1.5707963267948966


cdef inline double _accel(double th, double om, double tau, double inv_i,
                          double k_grav, double k_flex, double damp) noexcept nogil:
    return (tau - k_grav * sin(th) - k_flex * th - damp * om) * inv_i


cdef Py_ssize_t _run_constant(double inertia, double k_grav, double k_flex, double damp,
                              double tau, double th, double om, double dt,
                              Py_ssize_t n_steps, Py_ssize_t record_from,
                              double[:] rec, double* th_out, double* om_out) noexcept nogil:
    cdef double inv_i = 1.0 / inertia
    cdef double h2 = 0.5 * dt
    cdef double k1t, k1w, k2t, k2w, k3t, k3w, k4t, k4w
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n_rec = rec.shape[0]
    if record_from == 0:
        rec[0] = th
    for i in range(1, n_steps + 1):
        k1t = om
        k1w = _accel(th, om, tau, inv_i, k_grav, k_flex, damp)
        k2t = om + h2 * k1w
        k2w = _accel(th + h2 * k1t, k2t, tau, inv_i, k_grav, k_flex, damp)
        k3t = om + h2 * k2w
        k3w = _accel(th + h2 * k2t, k3t, tau, inv_i, k_grav, k_flex, damp)
        k4t = om + dt * k3w
        k4w = _accel(th + dt * k3t, k4t, tau, inv_i, k_grav, k_flex, damp)
        th = th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        om = om + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        if i >= record_from:
            rec[i - record_from] = th
        if not fabs(th) <= HALF_PI:
            for j in range(i - record_from + 1, n_rec):
                if j >= 0:
                    rec[j] = NAN
            th_out[0] = th
            om_out[0] = om
            return i
    th_out[0] = th
    om_out[0] = om
    return -1


def integrate_constant(inertia, k_grav, k_flex, damping, torque, theta0, omega0,
                       double dt, Py_ssize_t n_steps, Py_ssize_t record_from=0):
    """Integrate a batch of independent axes under constant torques.

    All per-run arguments are 1-D arrays of equal length. Returns
    ``(theta_record, theta_final, omega_final, diverged_at)`` where
    ``theta_record[:, j]`` is the angle after step ``record_from + j`` and
    ``diverged_at`` is the step index at which |theta| > pi/2 (-1 if never).
    """
    cdef double[:] ci = np.ascontiguousarray(inertia, dtype=np.float64)
    cdef double[:] cg = np.ascontiguousarray(k_grav, dtype=np.float64)
    cdef double[:] cf = np.ascontiguousarray(k_flex, dtype=np.float64)
    cdef double[:] cb = np.ascontiguousarray(damping, dtype=np.float64)
    cdef double[:] ct = np.ascontiguousarray(torque, dtype=np.float64)
    cdef double[:] c0 = np.ascontiguousarray(theta0, dtype=np.float64)
    cdef double[:] w0 = np.ascontiguousarray(omega0, dtype=np.float64)
    cdef Py_ssize_t n = ci.shape[0]
    if record_from < 0 or record_from > n_steps:
        raise ValueError("record_from must lie in [0, n_steps]")
    rec_np = np.empty((n, n_steps - record_from + 1), dtype=np.float64)
    th_np = np.empty(n, dtype=np.float64)
    om_np = np.empty(n, dtype=np.float64)
    div_np = np.empty(n, dtype=np.int64)
    cdef double[:, :] rec = rec_np
    cdef double[:] th_f = th_np
    cdef double[:] om_f = om_np
    cdef long long[:] div = div_np
    cdef Py_ssize_t r
    with nogil:
        for r in range(n):
            div[r] = _run_constant(ci[r], cg[r], cf[r], cb[r], ct[r], c0[r], w0[r],
                                   dt, n_steps, record_from, rec[r],
                                   &th_f[r], &om_f[r])
    return rec_np, th_np, om_np, div_np


def integrate_sampled(double inertia, double k_grav, double k_flex, double damping,
                      torque_half, double theta0, double omega0, double dt, Py_ssize_t n_steps):
    """Integrate one axis with torque sampled on the half-step grid.

    ``torque_half[m]`` is the torque at ``t = m * dt / 2`` (length
    ``2 * n_steps + 1``). Returns ``(theta, omega, diverged_at)``.
    """
    cdef double[:] tq = np.ascontiguousarray(torque_half, dtype=np.float64)
    if tq.shape[0] != 2 * n_steps + 1:
        raise ValueError("torque_half must have 2 * n_steps + 1 samples")
    th_np = np.full(n_steps + 1, np.nan)
    om_np = np.full(n_steps + 1, np.nan)
    cdef double[:] th_a = th_np
    cdef double[:] om_a = om_np
    cdef double inv_i = 1.0 / inertia
    cdef double h2 = 0.5 * dt
    cdef double th = theta0, om = omega0
    cdef double k1t, k1w, k2t, k2w, k3t, k3w, k4t, k4w
    cdef Py_ssize_t i
    cdef Py_ssize_t diverged = -1
    th_a[0] = th
    om_a[0] = om
    with nogil:
        for i in range(n_steps):
            k1t = om
            k1w = _accel(th, om, tq[2 * i], inv_i, k_grav, k_flex, damping)
            k2t = om + h2 * k1w
            k2w = _accel(th + h2 * k1t, k2t, tq[2 * i + 1], inv_i, k_grav, k_flex, damping)
            k3t = om + h2 * k2w
            k3w = _accel(th + h2 * k2t, k3t, tq[2 * i + 1], inv_i, k_grav, k_flex, damping)
            k4t = om + dt * k3w
            k4w = _accel(th + dt * k3t, k4t, tq[2 * i + 2], inv_i, k_grav, k_flex, damping)
            th = th + dt / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
            om = om + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
            th_a[i + 1] = th
            om_a[i + 1] = om
            if not fabs(th) <= HALF_PI:
                diverged = i + 1
                break
    return th_np, om_np, diverged
