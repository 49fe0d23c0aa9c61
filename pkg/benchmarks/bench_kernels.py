"""Compare the numba and numpy backends of the compiled kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3]

Each kernel is called once per backend to warm up (numba compilation is
excluded), then timed as the best of ``--repeat`` runs. Results of the two
backends are checked for agreement before timings are printed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mimostats._accel import BACKEND_ENV, HAVE_NUMBA
from mimostats.kernels import (
    block_edges,
    jacobi_eigvalsh,
    lagged_block_sums,
    laguerre_projection,
    pair_crossing_sums,
)


def _cases(rng):
    b, m = 1 << 15, 4
    z = (rng.standard_normal((b, 6, m)) + 1j * rng.standard_normal((b, 6, m))) / np.sqrt(2)
    gram = np.conj(np.swapaxes(z, 1, 2)) @ z
    x = rng.standard_normal(1 << 20)
    lags = np.arange(0, 61)
    edges = block_edges(x.size, 64)
    counts = rng.integers(0, m + 1, size=1 << 20).astype(float)
    xq = rng.uniform(0, 60, 4096)
    g = rng.standard_normal((xq.size, 4))
    return {
        "jacobi_eigvalsh (32768 x 4x4)": lambda be: jacobi_eigvalsh(gram, backend=be),
        "lagged_block_sums (2^20, 61 lags)": lambda be: lagged_block_sums(x, lags, edges, backend=be),
        "pair_crossing_sums (2^20)": lambda be: pair_crossing_sums(counts, m, edges, backend=be),
        "laguerre_projection (n=400, 4096 pts)": lambda be: laguerre_projection(400, 8, xq, g, backend=be),
    }


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not importable; only the numpy backend is available")
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    print(f"backend override variable: {BACKEND_ENV}")
    print(f"{'kernel':42s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in _cases(np.random.default_rng(0)).items():
        ref = {b: np.asarray(fn(b)) for b in backends}  # warm-up and agreement check
        if len(backends) == 2:
            np.testing.assert_allclose(ref["numba"], ref["numpy"], rtol=1e-9, atol=1e-9)
        times = [_best(lambda b=b: fn(b), args.repeat) for b in backends]
        row = f"{name:42s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
