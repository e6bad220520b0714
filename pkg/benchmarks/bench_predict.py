"""Compare the compiled prediction kernel against the numpy fallback.

Usage: python3 benchmarks/bench_predict.py [--rows N] [--trees N] [--repeat N]
"""

import argparse
import time

import numpy as np

from mcbrp.dataset import SyntheticSpec, generate_synthetic
from mcbrp.ensemble import fit_gbr
from mcbrp.ensemble import _treekernel_py

try:
    from mcbrp.ensemble import _treekernel
except ImportError:
    _treekernel = None


def bench(fn, args, repeat):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=50000)
    parser.add_argument("--trees", type=int, default=100)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    ds = generate_synthetic(SyntheticSpec(n_features=10, n_rows=2000), seed=0)
    model = fit_gbr(ds, {"n_trees": args.trees})
    rng = np.random.default_rng(1)
    X = np.ascontiguousarray(ds.rows[rng.integers(0, ds.n_rows, args.rows)])
    call_args = (X, *model._packed, model.init_value, model.learning_rate)

    t_py = bench(_treekernel_py.predict_packed, call_args, args.repeat)
    print(f"numpy fallback : {t_py * 1e3:8.1f} ms  ({args.rows / t_py:,.0f} rows/s)")
    if _treekernel is None:
        print("compiled kernel: not built")
        return
    t_cy = bench(_treekernel.predict_packed, call_args, args.repeat)
    print(f"compiled kernel: {t_cy * 1e3:8.1f} ms  ({args.rows / t_cy:,.0f} rows/s)")
    print(f"speedup        : {t_py / t_cy:.1f}x")

    out_py = _treekernel_py.predict_packed(*call_args)
    out_cy = _treekernel.predict_packed(*call_args)
    assert np.array_equal(out_py, out_cy), "backends disagree"
    print("outputs identical across backends")


if __name__ == "__main__":
    main()
