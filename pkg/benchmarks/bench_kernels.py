"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per (kernel, size) with the best-of-N time of each backend
and the speedup.  The compiled backend must be built (``pip install -e .``).
"""

import argparse
import timeit

import numpy as np

from abelia import _kernels_py as numpy_backend
from abelia.rng import generator

try:
    from abelia import _kernels as cython_backend
except ImportError:
    cython_backend = None


def cases(rng):
    for k, n in ((3, 4), (4, 5), (3, 8), (9, 3)):
        T = rng.standard_normal((k,) * n) + 1j * rng.standard_normal((k,) * n)
        # sparse-ish matrices, as in selection and projection operators
        mats = [np.where(rng.random((k, k)) < 0.5, rng.standard_normal((k, k)), 0) for _ in range(n)]
        yield f"apply_axes k={k} n={n}", "apply_axes", (T, mats)
    for size in (100, 1000, 10000):
        a = rng.integers(4, size=size)
        b = rng.integers(4, size=size)
        ia = np.sort(rng.choice(size, size=size // 4, replace=False))
        yield f"count_mismatches m={size // 4}", "count_mismatches", (a, b, ia, ia.copy())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if cython_backend is None:
        raise SystemExit("compiled extension not available; build it with pip install -e .")
    rng = generator(0, "bench")
    print(f"{'case':32s} {'numpy (ms)':>12s} {'cython (ms)':>12s} {'speedup':>8s}")
    for label, fn, argv in cases(rng):
        times = []
        for mod in (numpy_backend, cython_backend):
            f = getattr(mod, fn)
            number = max(1, int(0.05 / max(timeit.timeit(lambda: f(*argv), number=1), 1e-7)))
            best = min(timeit.repeat(lambda: f(*argv), number=number, repeat=args.repeat)) / number
            times.append(best * 1e3)
        print(f"{label:32s} {times[0]:12.4f} {times[1]:12.4f} {times[0] / times[1]:7.2f}x")


if __name__ == "__main__":
    main()
