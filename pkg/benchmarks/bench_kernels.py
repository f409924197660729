"""Compare the compiled and pure-Python kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Reports the best time per call for the energy kernel and for one bounded
simplex minimization, plus the largest disagreement between backends.
"""

import argparse
import math
import timeit

import numpy as np

from asympolaron import _kernels_py as pure

try:
    from asympolaron import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

OMEGA, PARITY = 0.15, -1.0
GP = math.sqrt(2.0) * 0.3 / OMEGA
SHAPE = (0.95, 0.8, 0.75, 0.6, 0.3, -0.3)
LOWER = [-0.5, -0.5, 0.05, 0.05, -1.0, -1.0]
UPPER = [2.0, 2.0, 5.0, 5.0, 1.0, 1.0]
STEP = [0.1, 0.1, 0.1, 0.1, 0.2, 0.2]
U0 = [0.9, 0.6, 0.8, 0.8, 0.2, -0.2]


def bench_energy(mod, number):
    t = timeit.repeat(lambda: mod.shape_energy(OMEGA, 1.0, PARITY, GP, *SHAPE), number=number, repeat=5)
    return min(t) / number


def bench_simplex(mod, number):
    def run():
        obj = mod.EnergyObjective(OMEGA, 1.0, PARITY, GP, 0.95, False)
        return mod.nelder_mead(obj, U0, LOWER, UPPER, STEP, 1e-9, 1e-12, 200000)

    t = timeit.repeat(run, number=number, repeat=3)
    return min(t) / number, run()


def max_disagreement(n=2000, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        sh = (rng.uniform(-0.5, 2), rng.uniform(-0.5, 2), rng.uniform(0.1, 3), rng.uniform(0.1, 3),
              rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        gp = rng.uniform(0, 6)
        a = pure.shape_energy(OMEGA, 1.0, PARITY, gp, *sh)
        b = compiled.shape_energy(OMEGA, 1.0, PARITY, gp, *sh)
        if math.isfinite(a) and math.isfinite(b):
            worst = max(worst, abs(a - b))
    return worst


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5, help="simplex runs per timing")
    args = ap.parse_args(argv)
    mods = [("python", pure)] + ([("cython", compiled)] if compiled else [])
    res = {}
    for name, mod in mods:
        e = bench_energy(mod, 2000)
        s, (u, f, nfev, _) = bench_simplex(mod, args.repeat)
        res[name] = (e, s, f, nfev)
        print(f"{name:>7}: energy {e * 1e6:9.2f} us/call   simplex {s * 1e3:9.2f} ms "
              f"({nfev} evals, E={f:.15f})")
    if compiled is None:
        print("compiled backend not built; only the Python twin was timed")
        return
    print(f"speedup: energy x{res['python'][0] / res['cython'][0]:.1f}, "
          f"simplex x{res['python'][1] / res['cython'][1]:.1f}")
    print(f"max |E_py - E_cy| over 2000 random shapes: {max_disagreement():.2e}")


if __name__ == "__main__":
    main()
