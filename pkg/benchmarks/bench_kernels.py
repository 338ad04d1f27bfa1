"""Compiled (numba) vs fallback timings for the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 20]

Both variants of every kernel are imported directly, so the comparison does
not depend on FDCR_DISABLE_NUMBA. The secular solver has no vectorised form,
so its fallback is the uncompiled Python loop. The first compiled call (JIT
warm-up) is excluded from the timings.
"""

import argparse
import timeit

import numpy as np

from fdcr._accel import USE_NUMBA
from fdcr.linalg import JACOBI_MAX_SWEEPS, JACOBI_TOL, jacobi_eig_loops, jacobi_eig_numpy
from fdcr.oracle import (
    BISECTION_RTOL, _secular_bisect, leakage_batch_loops, leakage_batch_numpy, quad_forms_loops,
    quad_forms_numpy,
)


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _secular_python(gap, b2, eps, t_hi, rtol):
    return _secular_bisect.py_func(gap, b2, eps, t_hi, rtol) if hasattr(_secular_bisect, "py_func") \
        else _secular_bisect(gap, b2, eps, t_hi, rtol)


def cases(rng):
    X = _crandn(rng, 9, 9)
    H = X + X.conj().T
    A = X @ X.conj().T
    x = _crandn(rng, 9)
    D = _crandn(rng, 4096, 9)
    w, P = _crandn(rng, 3, 9), rng.uniform(size=5)
    L, E = _crandn(rng, 4096, 9), _crandn(rng, 4096, 5)
    gap = np.sort(rng.uniform(0, 5, 9))[::-1].copy()
    gap[-1] = 0.0
    b2 = rng.uniform(0.1, 1.0, 9)
    return [
        ("jacobi eig 9x9",
         lambda: jacobi_eig_loops(H.copy(), JACOBI_TOL, JACOBI_MAX_SWEEPS),
         lambda: jacobi_eig_numpy(H.copy(), JACOBI_TOL, JACOBI_MAX_SWEEPS)),
        ("quad forms 4096x9",
         lambda: quad_forms_loops(A, x, D), lambda: quad_forms_numpy(A, x, D)),
        ("leakage batch 4096",
         lambda: leakage_batch_loops(w, P, L, E), lambda: leakage_batch_numpy(w, P, L, E)),
        ("secular bisection",
         lambda: _secular_bisect(gap, b2, 0.3, 10.0, BISECTION_RTOL),
         lambda: _secular_python(gap, b2, 0.3, 10.0, BISECTION_RTOL)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba enabled: {USE_NUMBA}")
    print(f"{'kernel':<22}{'compiled ms':>14}{'fallback ms':>13}{'speed-up':>10}")
    for name, fast, slow in cases(rng):
        fast()  # warm-up / JIT
        slow()
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<22}{t_fast:>14.3f}{t_slow:>13.3f}{t_slow / t_fast:>10.1f}x")


if __name__ == "__main__":
    main()
