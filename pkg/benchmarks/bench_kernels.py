"""Compiled vs pure-Python timings for the two hot kernels.

    python benchmarks/bench_kernels.py [--targets 4096] [--sources 8192] [--repeat 3]

Thread count follows SQGOBSTACLE_THREADS.
"""

import argparse
import timeit

import numpy as np

from sqgobstacle import _backend
from sqgobstacle.kernels import KernelConfig


def _annulus(n, rng, r_lo=1.05, r_hi=5.0):
    r = r_lo + (r_hi - r_lo) * rng.random(n)
    t = 2.0 * np.pi * rng.random(n)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--targets", type=int, default=4096)
    ap.add_argument("--sources", type=int, default=8192)
    ap.add_argument("--points", type=int, default=128 * 256 * 4, help="interpolation points")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _backend.BACKEND != "compiled":
        raise SystemExit("compiled extension not available; build it with pip install -e .")

    rng = np.random.default_rng(1)
    cfg = KernelConfig(0.1, 0.5)
    tg = _annulus(args.targets, rng)
    src = _annulus(args.sources, rng)
    w = rng.random(args.sources)

    vals = rng.normal(size=(2, 128, 256))
    pr = 1.0 + 5.0 * rng.random(args.points)
    pt = 2.0 * np.pi * rng.random(args.points)

    cases = {
        "direct_sum": lambda b: _backend.direct_sum(tg, src, w, 1.0, cfg.delta, cfg.blend, backend=b),
        "interp_polar": lambda b: _backend.interp_polar(vals, 1.0, 5.0 / 128, pr, pt, True, backend=b),
    }
    print(f"threads = {_backend.thread_count()}")
    print(f"{'kernel':<14}{'compiled [s]':>14}{'python [s]':>14}{'speed-up':>10}{'max rel diff':>15}")
    for name, fn in cases.items():
        times = {}
        for b in ("compiled", "python"):
            times[b] = min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
        a, p = np.asarray(fn("compiled")), np.asarray(fn("python"))
        diff = float(np.max(np.abs(a - p)) / max(np.max(np.abs(p)), 1e-300))
        print(f"{name:<14}{times['compiled']:>14.4f}{times['python']:>14.4f}"
              f"{times['python'] / times['compiled']:>10.1f}{diff:>15.2e}")


if __name__ == "__main__":
    main()
