"""Timing comparison of the numba and pure-numpy kernel builds.

Run:  python benchmarks/bench_kernels.py [--pool-size N] [--repeat R]

Covers the two hot kernels: the KRK retrograde fixpoint and batch
makespan evaluation.  Both builds must produce identical arrays; this
script re-checks that while timing them.
"""

import argparse
import time

import numpy as np

from ilpeda import accel
from ilpeda.jobshop import pool_orders, reference_matrix
from ilpeda.kernels import (
    _makespan_batch_loops, _makespan_batch_numpy, _solve_krk_loops,
    _solve_krk_numpy, build_move_tables,
)


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pool-size", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"numba available: {accel._HAVE_NUMBA}")

    print("\n== KRK retrograde fixpoint (16.7M positions) ==")
    tables = build_move_tables()
    (btm_np, wtm_np), t_np = timed(lambda: _solve_krk_numpy(tables), args.repeat)
    print(f"numpy : {t_np:8.3f}s")
    if accel._HAVE_NUMBA:
        from numba import njit

        solve = njit(cache=True)(_solve_krk_loops)
        jit_args = (tables["btm_legal"], tables["wtm_legal"],
                    tables["bk_checked"], tables["bdest"], tables["bcapt"],
                    tables["bhasmove"], tables["wdest"])
        solve(*jit_args)  # compile outside the timed region
        (btm_nb, wtm_nb), t_nb = timed(lambda: solve(*jit_args), args.repeat)
        assert (btm_np == btm_nb).all() and (wtm_np == wtm_nb).all()
        print(f"numba : {t_nb:8.3f}s   speedup x{t_np / t_nb:.1f}")

    print(f"\n== batch makespan ({args.pool_size} schedules) ==")
    orders = pool_orders(args.pool_size)
    dur = reference_matrix().astype(np.int64)
    ms_np, t_np = timed(lambda: _makespan_batch_numpy(orders, dur), args.repeat)
    print(f"numpy : {t_np:8.3f}s")
    if accel._HAVE_NUMBA:
        from numba import njit

        batch = njit(cache=True)(_makespan_batch_loops)
        batch(orders[:10], dur)  # compile
        ms_nb, t_nb = timed(lambda: batch(orders, dur), args.repeat)
        assert (ms_np == ms_nb).all()
        print(f"numba : {t_nb:8.3f}s   speedup x{t_np / t_nb:.1f}")


if __name__ == "__main__":
    main()
