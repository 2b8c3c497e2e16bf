"""Compare the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run once untimed (JIT warm-up), then timed ``--repeat`` times;
the best wall time is reported along with the max abs difference between
the two outputs.
"""
import argparse
import time

import numpy as np

from normreg import _kernels as K


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    M = rng.standard_normal((64, 64))
    S = M.T @ M
    yield ("jacobi 64x64",
           lambda: K.jacobi_eigvals_numba(S.copy(), 1e-12, 100)[0],
           lambda: K.jacobi_eigvals_numpy(S.copy(), 1e-12, 100)[0],
           np.sort)

    n = 20_000
    nnz = 100_000
    rows = rng.integers(0, n, nnz)
    cols = rng.integers(0, n, nnz)
    vals = rng.standard_normal(nnz)
    X = rng.standard_normal((n, 3))
    yield ("coo matmat n=2e4 nnz=1e5",
           lambda: K.coo_matmat_numba(rows, cols, vals, X, n),
           lambda: K.coo_matmat_numpy(rows, cols, vals, X, n),
           None)

    B = (rng.random((10, 10)) < 0.3).astype(np.int64)
    yield ("subset edge table n=10",
           lambda: np.asarray(K.subset_edge_table_numba(B), dtype=float),
           lambda: np.asarray(K.subset_edge_table_numpy(B), dtype=float),
           None)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<28} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max diff':>10}")
    for name, fast, slow, post in cases(rng):
        a, b = fast(), slow()
        if post is not None:
            a, b = post(a), post(b)
        diff = float(np.max(np.abs(a - b)))
        tf, ts = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<28} {tf * 1e3:>10.3f} {ts * 1e3:>10.3f} {ts / tf:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
