#!/usr/bin/env python3
"""Numba vs numpy timings for the hot kernels, plus end-to-end vertex enumeration.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from lambdaloc import kernels
from lambdaloc._accel import HAVE_NUMBA


def best_of(f, repeat):
    f()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def tight_sets(rows, words, density, rng):
    bits = rng.random((rows, words * 64)) < density
    packed = np.packbits(bits, axis=1, bitorder="little")
    return packed.view(np.uint64).reshape(rows, words)


def cases(rng):
    tight = tight_sets(600, 2, 0.55, rng)
    pos, neg = np.arange(0, 300), np.arange(300, 600)
    yield "adjacent_pairs 600x128", (
        lambda: kernels._adjacent_pairs_nb(tight, pos, neg, 40),
        lambda: kernels._adjacent_pairs_np(tight, pos, neg, 40),
    )
    mat = rng.integers(-3, 4, size=(120, 256)).astype(np.int64)
    yield "rank_mod_p 120x256", (
        lambda: kernels._rank_mod_p_nb_entry(mat),
        lambda: kernels._rank_mod_p_np_entry(mat),
    )
    rays = rng.integers(-50, 50, size=(200_000, 16)).astype(np.int64)
    row = rng.integers(-1, 2, size=16).astype(np.int64)
    yield "ray_slacks 200000x16", (
        lambda: kernels._ray_slacks_nb(rays, row),
        lambda: kernels._ray_slacks_np(rays, row),
    )


def end_to_end(flag):
    code = (
        "import time; from lambdaloc.polytope import enumerate_vertices, local_lambda_facets;"
        "t=time.perf_counter(); V=enumerate_vertices(local_lambda_facets(2));"
        "print(len(V), time.perf_counter()-t)"
    )
    env = dict(os.environ, LAMBDALOC_NO_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    count, secs = out.stdout.split()
    return int(count), float(secs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba disabled (LAMBDALOC_NO_NUMBA set or numba missing); numba columns run as plain Python")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28} {'numba [ms]':>12} {'numpy [ms]':>12} {'ratio':>8}")
    for name, (f_nb, f_np) in cases(rng):
        a, b = f_nb(), f_np()
        if not np.array_equal(np.asarray(a), np.asarray(b)):
            raise SystemExit(f"{name}: numba and numpy results differ")
        t_nb, t_np = best_of(f_nb, args.repeat), best_of(f_np, args.repeat)
        print(f"{name:28} {1e3 * t_nb:12.2f} {1e3 * t_np:12.2f} {t_np / t_nb:8.1f}")
    if not args.skip_e2e:
        print("\nlocal n=2 vertex enumeration (fresh interpreter, JIT cache warm after first run)")
        for flag in ("0", "1"):
            end_to_end(flag)
            count, secs = end_to_end(flag)
            label = "numpy" if flag == "1" else "numba"
            print(f"  {label:6} {count} vertices in {secs:.2f} s")


if __name__ == "__main__":
    main()
