"""Timing of the compiled kernels against the numpy fallback.

Usage:
    python benchmarks/bench_kernels.py            # both backends, side by side
    QUADWALK_NO_NUMBA=1 python benchmarks/bench_kernels.py --only current

The backend is chosen per call from the QUADWALK_NO_NUMBA environment
variable, so the script flips it between runs. Results of both backends
are compared for equality before any timing is printed.
"""
from __future__ import annotations

import argparse
import os
import time

import numpy as np

from quadwalk import _kernels

P = 2147483629
G1 = ([-1, 0, 1, 1, 2], [-1, 1, 0, -1, 1], [1, 1, 1, 1, 1])  # G_lambda at lam = 1


def _timed(fn, repeat: int):
    fn()  # warm-up (includes JIT compilation on the numba path)
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n_walk: int, n_series: int, n_mat: int):
    rng = np.random.default_rng(0)
    a = rng.integers(0, P, n_series)
    b = rng.integers(0, P, n_series)
    A = rng.integers(0, 1000, (n_mat + 5, n_mat))
    A[:, -3:] = A[:, :3] * 2 + A[:, 3:6]  # force a kernel
    return {
        f"excursions G_1, N={n_walk}": lambda: _kernels.excursions_mod(*G1, n_walk, P),
        f"series product, {n_series} terms": lambda: _kernels.series_mul_mod(a, b, n_series, P),
        f"nullspace, {n_mat + 5}x{n_mat}": lambda: _kernels.nullspace_vec_mod(A, P)[0],
    }


def run(backend: str, sizes, repeat: int) -> dict:
    if backend == "numpy":
        os.environ["QUADWALK_NO_NUMBA"] = "1"
    elif backend == "numba":
        os.environ["QUADWALK_NO_NUMBA"] = "0"
    out = {}
    for name, fn in cases(*sizes).items():
        out[name] = _timed(fn, repeat)
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walk", type=int, default=400, help="walk length for the excursion DP")
    ap.add_argument("--series", type=int, default=3000)
    ap.add_argument("--matrix", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--only", choices=["numba", "numpy", "current"], default=None)
    args = ap.parse_args()
    sizes = (args.walk, args.series, args.matrix)
    if args.only == "current":
        label = "numba" if _kernels.use_numba() else "numpy"
        for name, (sec, _) in run("current", sizes, args.repeat).items():
            print(f"{label:>6}  {name:<34} {sec * 1e3:10.2f} ms")
        return
    backends = [args.only] if args.only else ["numba", "numpy"]
    if "numba" in backends and not _kernels.HAVE_NUMBA:
        print("numba is not installed; timing the numpy path only")
        backends = ["numpy"]
    res = {b: run(b, sizes, args.repeat) for b in backends}
    names = list(next(iter(res.values())))
    if len(res) == 2:
        for name in names:
            same = np.array_equal(np.asarray(res["numba"][name][1]), np.asarray(res["numpy"][name][1]))
            if not same:
                raise SystemExit(f"backends disagree on {name}")
    header = f"{'kernel':<34}" + "".join(f"{b:>12}" for b in backends) + ("     speed-up" if len(res) == 2 else "")
    print(header)
    for name in names:
        row = f"{name:<34}" + "".join(f"{res[b][name][0] * 1e3:10.2f}ms" for b in backends)
        if len(res) == 2:
            row += f"{res['numpy'][name][0] / max(res['numba'][name][0], 1e-9):12.1f}x"
        print(row)


if __name__ == "__main__":
    main()
