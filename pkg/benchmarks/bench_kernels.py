"""Compare the compiled and numpy kernel backends on the hot loops.

Usage: python benchmarks/bench_kernels.py [--n-vars 12 14 16] [--depth 4] [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from maxkxor._backend import available_backends
from maxkxor.instances import sample_instance
from maxkxor.meanfield import _clause_arrays, initial_spins, sample_catalyst


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-vars", type=int, nargs="+", default=[12, 14, 16])
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--depth", type=int, default=4)
    ap.add_argument("--t-final", type=float, default=256.0)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = available_backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'N':>4}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for n in args.n_vars:
        inst = sample_instance(n, args.k, 1.5, n)
        diag = backends["python"].cost_table(n, inst.masks, inst.parities)
        g = rng.uniform(0, np.pi, args.depth)
        b = rng.uniform(0, np.pi / 2, args.depth)
        cvars, coff, cj = _clause_arrays(inst)
        lam = sample_catalyst(n, 0.5, 1).lambdas

        def mf(mod):
            y = initial_spins(n).ravel()
            mod.mf_integrate(y, n, cvars, coff, cj, lam, 0.0, args.t_final, args.t_final,
                             1e-3, 1e-6, 1e-8, 1.0, 10**8)

        cases = {
            "cost_table": lambda mod: mod.cost_table(n, inst.masks, inst.parities),
            f"qaoa_F (p={args.depth})": lambda mod: mod.qaoa_expectation(diag, n, g, b),
            f"mf (T={args.t_final:g})": mf,
        }
        for label, fn in cases.items():
            times = {name: best_of(lambda m=mod: fn(m), args.repeat) for name, mod in backends.items()}
            row = f"{label:<18}{n:>4}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times.values())
            if "cython" in times:
                row += f"{times['python'] / times['cython']:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
