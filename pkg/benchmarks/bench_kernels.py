"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each kernel is called once untimed (to trigger compilation) and then timed
``repeat`` times; the best time is reported.
"""
import argparse
import json
import time

import numpy as np

from diophlab import kernels
from diophlab._jit import NUMBA_ENABLED


def _best(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t)
    return min(times)


def cases(rng):
    D = 1 << 20
    N1 = np.array([[int(0.6180339887498949 * D)]], dtype=np.int64)
    N2 = rng.integers(0, D, size=(1, 2)).astype(np.int64)
    off = np.zeros(1, dtype=np.int64)
    Q = rng.integers(-400, 401, size=(200_000, 2)).astype(np.int64)
    cells = rng.uniform(0, 1, size=(4096, 2))
    Qf = rng.integers(-30, 31, size=(3000, 2)).astype(float)
    Qf = Qf[np.abs(Qf).sum(axis=1) > 0]
    Pf = rng.integers(-30, 31, size=(len(Qf), 1)).astype(float)
    return {
        "height_minima_lattice m1n1 T=10^6": ("height_minima_lattice", (N1, off, D, 10 ** 6)),
        "height_minima_lattice m1n2 T=400": ("height_minima_lattice", (N2, off, D, 400)),
        "remainders_array 2e5 x 2": ("remainders_array", (N2, off, D, Q)),
        "coverage_lattice 4096 cells": ("coverage_lattice", (cells, Qf, 1, 1 / 1e6)),
        "coverage_pairs 4096 cells": ("coverage_pairs", (cells, Pf, Qf, 1 / 1e6)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    if not NUMBA_ENABLED:
        print("numba is disabled; only the numpy twins are timed")
    rows = []
    for label, (name, a) in cases(np.random.default_rng(0)).items():
        t_np = _best(getattr(kernels, name + "_np"), a, args.repeat)
        t_jit = _best(getattr(kernels, name + "_jit"), a, args.repeat) if NUMBA_ENABLED else float("nan")
        rows.append({"case": label, "numpy_s": t_np, "numba_s": t_jit, "speedup": t_np / t_jit})
        print(f"{label:38s} numpy {t_np:9.4f} s   numba {t_jit:9.4f} s   x{t_np / t_jit:6.1f}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, sort_keys=True, indent=2)


if __name__ == "__main__":
    main()
