"""Compare the numba and pure-numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--batch 2000] [--steps 2000]
"""

import argparse
import time

import numpy as np

from hypdrift import _kernels as K


def timeit(fn, *args, repeat=3, warmup=1, **kw):
    for _ in range(warmup):
        fn(*args, **kw)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kw)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--ball-radius", type=int, default=10)
    args = ap.parse_args()

    backends = [("numpy", K.numpy_backend)]
    if K.numba_backend is not None:
        backends.append(("numba", K.numba_backend))
    else:
        print("numba backend unavailable; timing numpy only")

    B, n = args.batch, args.steps
    cumprob = np.array([0.25, 0.5, 0.75, 1.0])
    sup_words = np.array([[0], [1], [2], [3]], dtype=np.int8)
    sup_lens = np.ones(4, dtype=np.int64)
    cps = np.array([n // 2, n], dtype=np.int64)
    theta = np.pi / 4
    Kr = np.array([[np.cos(theta), np.sin(theta)],
                   [-np.sin(theta), np.cos(theta)]])
    A = np.diag([3.0, 1.0 / 3.0])
    mats = np.stack([A, np.linalg.inv(A), Kr @ A @ Kr.T,
                     Kr @ np.linalg.inv(A) @ Kr.T])
    rng = np.random.default_rng(0)
    zr = rng.normal(0, 2, 5000)
    zi = np.exp(rng.normal(0, 1, 5000))
    rep_re = rng.normal(0, 3, 400)
    rep_im = np.exp(rng.normal(0, 1, 400))

    results = {}
    for name, be in backends:
        inc = be.sample_increments(7, B, n, cumprob)
        rows = [
            ("sample_increments",
             timeit(be.sample_increments, 7, B, n, cumprob)),
            ("tree_walk",
             timeit(be.tree_walk, inc, sup_words, sup_lens, 4, cps)),
            ("plane_walk",
             timeit(be.plane_walk, inc, mats, cps)),
            ("modular_ball",
             timeit(be.modular_ball, args.ball_radius)),
            ("bump_values",
             timeit(be.bump_values, zr, zi, rep_re, rep_im, 1.0)),
        ]
        results[name] = dict(rows)

    names = [r for r in results["numpy"]]
    print("%-20s %12s %12s %9s" % ("kernel", "numpy (s)", "numba (s)",
                                   "speedup"))
    for kn in names:
        t_np = results["numpy"][kn]
        if "numba" in results:
            t_nb = results["numba"][kn]
            print("%-20s %12.4f %12.4f %8.1fx" % (kn, t_np, t_nb,
                                                  t_np / t_nb))
        else:
            print("%-20s %12.4f %12s %9s" % (kn, t_np, "-", "-"))


if __name__ == "__main__":
    main()
