"""Timing of the tridiagonal kernels and of one linear propagator step, per backend.

    python benchmarks/bench_kernels.py [--sizes 1024 4096 16384] [--repeat 20]

The numba backend runs in this process. The numpy fallback is timed in a
child process started with POINTNLS_DISABLE_NUMBA=1, since the backend is
fixed at import time.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

CHILD = "--child"


def _time(fn, repeat):
    fn()  # warm-up (includes jit compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def measure(sizes, repeat):
    from pointnls import PointInteractionOp, make_grid, u_apply
    from pointnls._kernels import BACKEND, TridiagSolver, sym_tri_matvec

    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        grid = make_grid(3, 40.0, n)
        diag = grid.stiffness_diag + (0.5 - 3j) * grid.weights[:-1]
        off = grid.stiffness_off
        rhs = rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
        solver = TridiagSolver(diag, off)
        op = PointInteractionOp(grid, 1.0)
        psi = np.exp(-grid.r**2).astype(complex)
        rows.append({
            "backend": BACKEND,
            "N": n,
            "factor_solve_s": _time(lambda: TridiagSolver(diag, off).solve(rhs), repeat),
            "solve_s": _time(lambda: solver.solve(rhs), repeat),
            "matvec_s": _time(lambda: sym_tri_matvec(diag, off, rhs), repeat),
            "cn_step_s": _time(lambda: u_apply(op, psi, 1e-2, 1), repeat),
        })
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument(CHILD, action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        print(json.dumps(measure(args.sizes, args.repeat)))
        return
    env = dict(os.environ, POINTNLS_DISABLE_NUMBA="1")
    cmd = [sys.executable, __file__, CHILD, "--repeat", str(args.repeat), "--sizes", *map(str, args.sizes)]
    fallback = json.loads(subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout)
    fast = measure(args.sizes, args.repeat)
    cols = ("factor_solve_s", "solve_s", "matvec_s", "cn_step_s")
    print(f"{'N':>7} {'kernel':>12} {'numba [us]':>12} {'numpy [us]':>12} {'speed-up':>9}")
    for a, b in zip(fast, fallback):
        for c in cols:
            print(f"{a['N']:>7} {c[:-2]:>12} {a[c] * 1e6:12.1f} {b[c] * 1e6:12.1f} {b[c] / a[c]:9.1f}")


if __name__ == "__main__":
    main()
