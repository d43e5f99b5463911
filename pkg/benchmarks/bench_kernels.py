#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python twin.

Usage: python benchmarks/bench_kernels.py [n_iterations]

Times the three hot entry points (crossing-time solve, reduced-function
gradient, scattering-flow right-hand side) plus one integrated workload
(a Highway trace between action sections) on both backends.
"""

import math
import sys
import time

import numpy as np


def _bench_scalar(mod, n, states):
    out = {}
    t0 = time.perf_counter()
    for (w1, w2, t1, t2) in states[:n]:
        mod.tau_star(0, w1, w2, 0.3, 0.1, t1, t2)
    out["tau_star"] = (time.perf_counter() - t0) / n

    t0 = time.perf_counter()
    for (w1, w2, t1, t2) in states[:n]:
        mod.lstar_grad(0, 0.3, 0.1, 1.0, 1.0, 1.0, w1, w2, t1, t2)
    out["lstar_grad"] = (time.perf_counter() - t0) / n

    t0 = time.perf_counter()
    for (w1, w2, t1, t2) in states[:n]:
        mod.flow_rhs(0, 0.3, 0.1, 1.0, 1.0, 1.0, w1, w2, t1, t2)
    out["flow_rhs"] = (time.perf_counter() - t0) / n
    return out


def _bench_trace(params):
    from arnolddiff import highway

    st, _ = highway.highway_seed(7.0, -7.0, params)
    t0 = time.perf_counter()
    orb = highway.highway_trace(st, params, stop=(1, 0.0, +1), drift_tol=1e-6)
    return time.perf_counter() - t0, len(orb.t)


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    rng = np.random.default_rng(0)
    states = [
        (rng.uniform(-5, 5), rng.uniform(-5, 5),
         rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))
        for _ in range(n)
    ]

    from arnolddiff.kernels import pure

    rows = {"python": _bench_scalar(pure, n, states)}
    try:
        from arnolddiff.kernels import _speedups

        rows["cython"] = _bench_scalar(_speedups, n, states)
    except ImportError:
        print("compiled backend not available; benchmarking the fallback only")

    print(f"\nper-call times over {n} random states (microseconds):")
    names = sorted(rows["python"])
    header = "backend    " + "".join(f"{k:>14}" for k in names)
    print(header)
    for backend, vals in rows.items():
        print(f"{backend:<11}" + "".join(f"{vals[k] * 1e6:>13.2f} " for k in names))
    if "cython" in rows:
        print("speedup    " + "".join(
            f"{rows['python'][k] / rows['cython'][k]:>12.1f}x " for k in names
        ))

    from arnolddiff import kernels
    from arnolddiff.model import ModelParams

    params = ModelParams(0.3, 0.1, 1.0, 1.0, 1.0, eps=1e-3)
    wall, steps = _bench_trace(params)
    print(f"\nintegrated workload with the active backend ({kernels.BACKEND}):")
    print(f"  Highway trace I2 = -7 -> 0: {wall:.2f} s, {steps} accepted steps")


if __name__ == "__main__":
    main()
