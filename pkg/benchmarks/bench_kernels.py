"""Time the disk-association kernel: compiled extension vs numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case checks that both backends return identical edges before timing.
"""

import argparse
import time

import numpy as np

from colocshare import kernels

CASES = [
    # (label, n_users, n_towers, radius, side)
    ("desk scale, r_opt", 16_000, 16, 1054.0, 4000.0),
    ("dense users", 160_000, 50, 600.0, 4000.0),
    ("many towers, small r", 50_000, 5_000, 40.0, 4000.0),
    ("clustering self-join", 20_000, 20_000, 5.0, 40_000.0),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_EXTENSION:
        raise SystemExit("compiled kernels are not built; reinstall without COLOCSHARE_NO_EXT")
    rng = np.random.default_rng(0)
    print(f"{'case':24s} {'edges':>10s} {'compiled s':>11s} {'python s':>10s} {'speed-up':>9s}")
    for label, nu, nt, r, side in CASES:
        q = rng.uniform(0, side, (nu, 2))
        p = q if nt == nu else rng.uniform(0, side, (nt, 2))
        a = kernels.disk_edges(q, p, r, side, side, backend="compiled")
        b = kernels.disk_edges(q, p, r, side, side, backend="python")
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), label
        tc = best_of(lambda: kernels.disk_edges(q, p, r, side, side, backend="compiled"),
                     args.repeat)
        tp = best_of(lambda: kernels.disk_edges(q, p, r, side, side, backend="python"),
                     args.repeat)
        print(f"{label:24s} {a[0].size:10d} {tc:11.4f} {tp:10.4f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
