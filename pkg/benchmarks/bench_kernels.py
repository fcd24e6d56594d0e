"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from prometheus_teleop._kernels import pure
from prometheus_teleop.kinematics import default_dh_table

try:
    from prometheus_teleop._kernels import _core as compiled
except ImportError:
    compiled = None


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def bench(name, make_args, repeat):
    rows = []
    args = make_args()
    t_pure = timeit(lambda: getattr(pure, name)(*args), repeat)
    rows.append(("pure", t_pure))
    if compiled is not None:
        t_comp = timeit(lambda: getattr(compiled, name)(*args), repeat)
        rows.append(("compiled", t_comp))
        speedup = t_pure / t_comp
    else:
        speedup = float("nan")
    return rows, speedup


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=200)
    opts = parser.parse_args()

    dh = default_dh_table()
    rng = np.random.default_rng(0)
    q = rng.uniform(-np.pi, np.pi, 6)
    T = pure.fk_frames(q, dh.a, dh.d, dh.alpha, dh.theta_offset)[6]
    blob = bytes(rng.integers(0, 256, 65536, dtype=np.uint8))

    cases = [
        ("fk_frames", lambda: (q, dh.a, dh.d, dh.alpha, dh.theta_offset)),
        ("ik_candidates", lambda: (T, dh.d[0], dh.a[1], dh.a[2], dh.d[3], dh.d[4], dh.d[5])),
        ("crc16_ccitt_false", lambda: (blob,)),
    ]

    if compiled is None:
        print("compiled kernels not available; timing the pure backend only\n")
    print(f"{'kernel':<20} {'backend':<10} {'per call':>12} {'speedup':>9}")
    for name, make_args in cases:
        rows, speedup = bench(name, make_args, opts.repeat)
        for backend, t in rows:
            extra = f"{speedup:8.1f}x" if backend == "compiled" else ""
            print(f"{name:<20} {backend:<10} {t * 1e6:>10.1f}µs {extra:>9}")
    print("\n(crc16 case processes a 64 KiB buffer per call)")


if __name__ == "__main__":
    main()
