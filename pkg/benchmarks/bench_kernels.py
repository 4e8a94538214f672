"""Time the compiled and NumPy kernel backends on representative inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--n 32] [--repeat 5] [--json out.json]

Reports the best-of-``repeat`` wall time per kernel and backend, the
speedup, and the max difference between backends.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from mdlab import kernels


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    npts = n ** 3
    psi = rng.normal(size=(4, npts)) + 1j * rng.normal(size=(4, npts))
    A = rng.normal(size=(4, npts))
    mmax = max(1, n // 8)
    r = np.arange(-mmax, mmax + 1)
    modes = np.stack(np.meshgrid(r, r, r, indexing="ij"), -1).reshape(-1, 3)
    coeffs = rng.normal(size=(4, len(modes))) + 1j * rng.normal(size=(4, len(modes)))
    points = rng.uniform(-20, 20, size=(4096, 3))
    return {
        "dirac_source": (psi, A),
        "current": (psi,),
        "lowpass_eval": (points, modes, coeffs, 2 * np.pi / 40.0),
    }


def bench(n=32, repeat=5):
    inputs = make_inputs(n)
    backends = {name: kernels.get_backend(name) for name in kernels.BACKENDS}
    rows = []
    for kname, args in inputs.items():
        times, outs = {}, {}
        for bname, mod in backends.items():
            fn = getattr(mod, kname)
            outs[bname] = fn(*args)
            times[bname] = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        row = {"kernel": kname, "n": n, **{f"{b}_s": t for b, t in times.items()}}
        if "compiled" in times:
            row["speedup"] = times["python"] / times["compiled"]
            row["max_abs_diff"] = float(np.abs(outs["compiled"] - outs["python"]).max())
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json")
    args = p.parse_args(argv)
    if "compiled" not in kernels.BACKENDS:
        print("compiled backend unavailable; timing the NumPy fallback only", file=sys.stderr)
    rows = bench(args.n, args.repeat)
    for r in rows:
        parts = [f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()]
        print("  ".join(parts))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
