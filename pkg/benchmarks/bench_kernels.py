"""Compare the compiled and numpy kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are imported
directly, so the environment switch that picks the default does not matter.
"""
import argparse
import timeit

import numpy as np

from blowlab import _pykernels
from blowlab.spectral import Grid, random_smooth

try:
    from blowlab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _cases(cutoff, problems, steps):
    # smallest even grid whose dealias cutoff is `cutoff`
    n_modes = 3 * cutoff + (1 if cutoff % 2 else 2)
    u = np.ascontiguousarray(random_smooth(Grid(n_modes), 0, 0.5).coeffs)
    rng = np.random.default_rng(0)
    c = rng.uniform(0.1, 10, problems)
    p = rng.uniform(1.01, 3, problems)
    y0 = rng.uniform(0.1, 10, problems)
    T = y0 ** (1 - p) / (c * (p - 1))
    args = (c, p, np.log(y0), 0.9 * T / steps, steps, steps)
    return {
        "convection_bruteforce": lambda mod: mod.convection_bruteforce(u, u.shape[1] // 2),
        "rk4_log_bernoulli": lambda mod: mod.rk4_log_bernoulli(*args),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cutoff", type=int, default=4, help="dealias cutoff of the convolution cube")
    ap.add_argument("--problems", type=int, default=100)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled extension not available; timing the numpy backend only")

    print(f"{'kernel':<24}{'backend':<10}{'best [s]':>12}{'speedup':>10}")
    for name, fn in _cases(args.cutoff, args.problems, args.steps).items():
        base = None
        results = {}
        for label, mod in backends:
            best = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
            results[label] = fn(mod)
            base = base or best
            print(f"{name:<24}{label:<10}{best:>12.4f}{base / best:>9.1f}x")
        if len(results) == 2:
            a, b = results.values()
            err = np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300)
            print(f"{'':<24}{'max rel diff':<10}{err:>12.2e}")


if __name__ == "__main__":
    main()
