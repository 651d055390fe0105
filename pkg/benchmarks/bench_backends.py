#!/usr/bin/env python3
"""Time the numba kernel backend against the pure-numpy fallback.

Workloads are sized like the hot paths they stand for (default channel plan
around 96x128 inputs).  The numba column is skipped with a notice when numba
is not importable.  JIT compilation happens during an untimed warmup call,
so the numbers reflect steady-state throughput.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --only window_max,assign_pixels --number 50
"""

import argparse
import sys
import time

import numpy as np

from emsa import _kernels_numpy as knp

try:
    from emsa import _kernels_numba as knb
except ImportError:
    knb = None


def make_workloads(rng):
    """name -> (args tuple, comparison) for every kernel pair."""
    conv_x = rng.standard_normal((1, 64, 50, 66)).astype(np.float32)
    conv_w = (rng.standard_normal((64, 64, 3, 3)) * 0.05).astype(np.float32)
    conv_b = np.zeros(64, np.float32)

    dw_x = rng.standard_normal((1, 40, 98, 130)).astype(np.float32)
    dw_w = rng.standard_normal((40, 3, 3)).astype(np.float32)

    pool_x = rng.standard_normal((1, 64, 97, 129)).astype(np.float32)
    avg_x = rng.standard_normal((1, 128, 48, 64)).astype(np.float32)

    hm = rng.random((96, 128)).astype(np.float32)

    centers = rng.uniform(0, 96, (8, 2)).astype(np.float64)

    fg = rng.random((96, 128)) < 0.5
    rows, cols = np.nonzero(fg)
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    dr = rng.uniform(-20, 20, rows.shape[0])
    dc = rng.uniform(-20, 20, rows.shape[0])
    pts = rng.uniform(0, 96, (16, 2)).astype(np.float64)

    return {
        "conv2d": ((conv_x, conv_w, conv_b, 1, 1), "close"),
        "depthwise3x3": ((dw_x, dw_w), "close"),
        "maxpool": ((pool_x, 3, 3, 2, 2), "exact"),
        "avgpool": ((avg_x, 2, 2, 2, 2), "close"),
        "window_max": ((hm, 17), "exact"),
        "gaussian": ((96, 128, centers, 8.0), "exact"),
        "assign_pixels": ((rows, cols, dr, dc, pts, 8.0), "exact"),
    }


def best_time(fn, args, repeat, number):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions, best one wins (default 5)")
    ap.add_argument("--number", type=int, default=20,
                    help="kernel calls per repetition (default 20)")
    ap.add_argument("--only", metavar="NAME,NAME",
                    help="comma-separated subset of workloads")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-check", action="store_true",
                    help="skip the backend agreement check")
    args = ap.parse_args(argv)

    workloads = make_workloads(np.random.default_rng(args.seed))
    if args.only:
        wanted = args.only.split(",")
        unknown = [n for n in wanted if n not in workloads]
        if unknown:
            ap.error(f"unknown workloads {unknown}; choose from {sorted(workloads)}")
        workloads = {n: workloads[n] for n in wanted}

    if knb is None:
        print("numba is not importable; timing the numpy backend only\n")

    print(f"{'kernel':<14} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, (call_args, cmp_mode) in workloads.items():
        np_fn = _resolve(knp, name)
        t_np = best_time(np_fn, call_args, args.repeat, args.number)
        if knb is None:
            print(f"{name:<14} {t_np * 1e3:>10.3f} {'-':>10} {'-':>8}")
            continue
        nb_fn = _resolve(knb, name)
        got = nb_fn(*call_args)  # warmup/JIT, reused for the check
        if not args.no_check:
            want = np_fn(*call_args)
            if cmp_mode == "exact":
                assert np.array_equal(want, got), f"{name}: backends disagree"
            else:
                assert np.allclose(want, got, rtol=1e-4, atol=1e-5), \
                    f"{name}: backends disagree"
        t_nb = best_time(nb_fn, call_args, args.repeat, args.number)
        print(f"{name:<14} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} "
              f"{t_np / t_nb:>7.2f}x")
    return 0


def _resolve(mod, name):
    return getattr(mod, "render_gaussian_max" if name == "gaussian"
                   else name + "_core")


if __name__ == "__main__":
    sys.exit(main())
