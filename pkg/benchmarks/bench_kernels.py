"""Compare the compiled and pure-Python RK4 cores on a sweep-sized batch.

    python benchmarks/bench_kernels.py [--runs 154] [--seconds 30] [--repeat 3]

The default batch mirrors one mapping sweep: 77 grid points x 2 axes held
for 30 s at dt = 1 ms.
"""
import argparse
import time

import numpy as np

from gimbench import gimbalsim, kernels
from gimbench.kernels import python_backend


def batch(n_runs):
    axes = [gimbalsim.design_axis(107.7), gimbalsim.design_axis(87.1)]
    params = [axes[i % 2] for i in range(n_runs)]
    torque = np.linspace(-20.0, 20.0, n_runs) * 1e-6
    return (np.array([p.inertia_si() for p in params]), np.array([p.k_grav_si() for p in params]),
            np.array([p.k_flex_si() for p in params]), np.array([p.damping_si() for p in params]),
            torque, np.zeros(n_runs), np.zeros(n_runs))


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=154)
    ap.add_argument("--seconds", type=float, default=30.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    n_steps = int(round(args.seconds / args.dt))
    record_from = n_steps - int(round(0.5 / args.dt))
    call = batch(args.runs) + (args.dt, n_steps, record_from)
    steps = args.runs * n_steps
    print(f"{args.runs} runs x {n_steps} steps ({steps / 1e6:.1f} M RK4 steps)")

    t_py, out_py = best_time(python_backend.integrate_constant, call, args.repeat)
    print(f"python    {t_py:8.3f} s  {steps / t_py / 1e6:7.2f} M steps/s")
    if kernels.compiled_backend is None:
        print("compiled  (extension not built)")
        return
    t_c, out_c = best_time(kernels.compiled_backend.integrate_constant, call, args.repeat)
    identical = all(np.array_equal(a, b, equal_nan=True) for a, b in zip(out_py, out_c))
    print(f"compiled  {t_c:8.3f} s  {steps / t_c / 1e6:7.2f} M steps/s")
    print(f"speedup   {t_py / t_c:8.1f} x   results identical: {identical}")

    # one trajectory under a time-varying torque: a scalar loop in Python
    p = gimbalsim.design_axis(107.7)
    tq = 1e-5 * np.sin(np.arange(2 * n_steps + 1) * 0.5 * args.dt)
    one = (p.inertia_si(), p.k_grav_si(), p.k_flex_si(), p.damping_si(), tq, 0.0, 0.0, args.dt, n_steps)
    t_py, out_py = best_time(python_backend.integrate_sampled, one, args.repeat)
    t_c, out_c = best_time(kernels.compiled_backend.integrate_sampled, one, args.repeat)
    identical = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
    print(f"sampled torque, 1 run x {n_steps} steps: python {t_py:.3f} s, compiled {t_c:.4f} s, "
          f"speedup {t_py / t_c:.0f} x, identical: {identical}")


if __name__ == "__main__":
    main()
