#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Run: python benchmarks/bench_kernels.py [--agents N] [--ticks T]
The same comparison is what VCFLOCK_NUMBA=0 switches at import time.
"""

import argparse
import time

import numpy as np

from vcflock.kernels import _numpy_impl

try:
    from vcflock.kernels import _numba_impl
except ImportError:
    _numba_impl = None


def time_fn(fn, *args, repeat=5, inner=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--agents", type=int, default=12)
    ap.add_argument("--ticks", type=int, default=6000)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    n, t_len = args.agents, args.ticks
    pos = rng.normal(size=(n, 3))
    yaw = rng.normal(size=n)
    ref_pos = pos + rng.normal(scale=0.2, size=(n, 3))
    ref_yaw = yaw + 0.1

    tpos = rng.normal(size=(t_len, n, 3))
    tvel = rng.normal(size=(t_len, n, 3))
    tref = tpos + rng.normal(scale=0.1, size=(t_len, n, 3))
    present = np.ones((t_len, n), dtype=np.bool_)
    vc_pos = rng.normal(size=(t_len, 3))
    vc_vel = rng.normal(size=(t_len, 3))
    omega = rng.normal(scale=0.2, size=t_len)

    impls = [("numpy", _numpy_impl)]
    if _numba_impl is not None:
        # trigger compilation before timing
        _numba_impl.lagged_step(pos, yaw, ref_pos, ref_yaw, 2.0, 1.0, 0.01)
        _numba_impl.pairwise_distances(pos)
        _numba_impl.trace_metrics(tpos[:2], tvel[:2], tref[:2], present[:2],
                                  vc_pos[:2], vc_vel[:2], omega[:2])
        impls.append(("numba", _numba_impl))
    else:
        print("numba not importable; benchmarking numpy only")

    rows = []
    for name, impl in impls:
        t_step = time_fn(impl.lagged_step, pos, yaw, ref_pos, ref_yaw,
                         2.0, 1.0, 0.01, repeat=7, inner=200)
        t_pair = time_fn(impl.pairwise_distances, pos, repeat=7, inner=200)
        t_trace = time_fn(impl.trace_metrics, tpos, tvel, tref, present,
                          vc_pos, vc_vel, omega, repeat=3)
        rows.append((name, t_step, t_pair, t_trace))

    print(f"\nagents={n} trace_ticks={t_len}")
    print(f"{'backend':<8} {'lagged_step':>14} {'pairwise':>14} {'trace_metrics':>14}")
    for name, a, b, c in rows:
        print(f"{name:<8} {a * 1e6:>11.1f} us {b * 1e6:>11.1f} us {c * 1e3:>11.2f} ms")
    if len(rows) == 2:
        print(f"{'speedup':<8} {rows[0][1] / rows[1][1]:>13.1f}x "
              f"{rows[0][2] / rows[1][2]:>13.1f}x {rows[0][3] / rows[1][3]:>13.1f}x")

    # cross-check both paths agree bitwise on the same inputs
    if _numba_impl is not None:
        a = _numpy_impl.trace_metrics(tpos, tvel, tref, present, vc_pos,
                                      vc_vel, omega)
        b = _numba_impl.trace_metrics(tpos, tvel, tref, present, vc_pos,
                                      vc_vel, omega)
        worst = max(float(np.nanmax(np.abs(x - y))) for x, y in zip(a, b))
        print(f"max |numpy - numba| over trace_metrics outputs: {worst:.3e}")


if __name__ == "__main__":
    main()
