"""Compare the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats 5]

Prints one row per kernel with the median time of each backend and the
speed-up. Also checks that both backends return identical results.
"""

import argparse
import statistics
import time

import numpy as np

from spsg import _fallback

try:
    from spsg import _kernels
except ImportError:  # extension not built
    _kernels = None


def _time(fn, repeats):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def cases(rng):
    M = rng.standard_normal((20, 5000))
    bins = rng.integers(0, 11, (321, 481))
    lab = np.ascontiguousarray(rng.random((321, 481, 3)) * [100, 50, 50])
    H, W = lab.shape[:2]
    step = np.sqrt(H * W / 200)
    ys, xs = np.meshgrid(np.arange(step / 2, H, step), np.arange(step / 2, W, step), indexing="ij")
    centers = np.column_stack([lab[ys.astype(int).ravel(), xs.astype(int).ravel()],
                               ys.ravel(), xs.ravel()])
    return {
        "project_simplex_columns 20x5000": lambda k: k.project_simplex_columns(M),
        "window_histograms 321x481 r=9": lambda k: k.window_histograms(bins, 11, 9),
        "slic_assign 321x481 K=200": lambda k: k.slic_assign(lab, centers, step, 10.0),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; only the fallback can run")
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s}{'python [s]':>12s}{'cython [s]':>12s}{'speed-up':>10s}  same")
    for name, call in cases(rng).items():
        tp, op = _time(lambda: call(_fallback), args.repeats)
        if _kernels is None:
            print(f"{name:36s}{tp:12.4f}{'-':>12s}{'-':>10s}")
            continue
        tc, oc = _time(lambda: call(_kernels), args.repeats)
        op = op if isinstance(op, tuple) else (op,)
        oc = oc if isinstance(oc, tuple) else (oc,)
        same = all(np.array_equal(a, b) for a, b in zip(op, oc))
        print(f"{name:36s}{tp:12.4f}{tc:12.4f}{tp / tc:10.1f}x  {same}")


if __name__ == "__main__":
    main()
