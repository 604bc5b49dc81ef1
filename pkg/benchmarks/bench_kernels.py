"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the two hot operations (|u|^2 and the nonlinear phase rotation) and a
full evolution block at desk scale. Run with::

    python benchmarks/bench_kernels.py [--points 64] [--repeats 5]

The active backend is chosen at import time; set NLSLAB_PURE_PYTHON=1 to
force the fallback. This script times both implementations directly,
regardless of which one the package selected.
"""

import argparse
import time
import timeit

import numpy as np

from nlslab import kernels
from nlslab import _kernels_py
from nlslab.cli import gaussian_datum
from nlslab.dynamics import EquationParams, EvolutionConfig, evolve
from nlslab.grid import make_grid


def _impls():
    out = [("python", _kernels_py)]
    if kernels.BACKEND == "cython":
        from nlslab import _kernels_cy

        out.append(("cython", _kernels_cy))
    return out


def bench_op(label, funcs, repeats):
    print(f"\n{label}")
    base = None
    for name, fn in funcs:
        t = min(timeit.repeat(fn, number=1, repeat=repeats))
        speedup = "" if base is None else f"  ({base / t:.2f}x vs python)"
        if base is None:
            base = t
        print(f"  {name:8s} {t * 1e3:9.3f} ms{speedup}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    grid = make_grid(3, args.points, 32.0)
    u = gaussian_datum(grid, 1.0, 2.0).values
    pot = np.random.default_rng(0).standard_normal(grid.shape)
    impls = _impls()
    print(f"grid {args.points}^3, active backend: {kernels.BACKEND}")

    bench_op("abs2", [(n, (lambda m: (lambda: m.abs2(u)))(m)) for n, m in impls], args.repeats)
    bench_op(
        "phase_rotate",
        [(n, (lambda m: (lambda: m.phase_rotate(u, pot, 0.01, 2.0)))(m)) for n, m in impls],
        args.repeats,
    )

    params = EquationParams(3, 2.0, 2.5, 1.0, 1.0)
    cfg = EvolutionConfig(dt=1e-3, t_end=0.05, cadence=50)
    u0 = gaussian_datum(grid, 1.0, 2.0)
    t0 = time.perf_counter()
    evolve(u0, params, cfg)
    dt = time.perf_counter() - t0
    print(f"\nevolution block (50 steps, backend {kernels.BACKEND}): {dt * 1e3:.0f} ms "
          f"({dt / 50 * 1e3:.1f} ms/step)")


if __name__ == "__main__":
    main()
