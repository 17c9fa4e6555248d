"""Time the numpy and numba kernel paths on identical inputs.

Run with ``python3 benchmarks/bench_kernels.py [--repeat R]``. Both paths are
checked for agreement before timing; the numba column is skipped when numba
is unavailable or disabled through QIDLAB_DISABLE_NUMBA.
"""

import argparse
import time

import numpy as np

from qidlab import backend, kernels
from qidlab.bits import irreducible_poly


def cases(rng):
    rows = rng.integers(0, 2**64, size=(20_000, 2, 1), dtype=np.uint64)
    span = kernels.NUMPY_KERNELS["span_elements"](rows)
    masks = rng.integers(0, 2**64, size=(6, 1), dtype=np.uint64)
    words = rng.integers(0, 2**64, size=(256, 4), dtype=np.uint64)
    k = 12
    a = rng.integers(0, 2**k, size=200_000, dtype=np.uint64)
    b = rng.integers(0, 2**k, size=200_000, dtype=np.uint64)
    return {
        "popcount": (rng.integers(0, 2**64, size=1_000_000, dtype=np.uint64),),
        "span_elements": (rows,),
        "schur_failures": (span, masks, 9.6),
        "pairwise_min_distance": (words,),
        "gf2k_mul": (a, b, k, irreducible_poly(k)),
    }


def best_of(fn, args, repeat):
    fn(*args)  # warm-up (triggers compilation on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    use_numba = backend() == "numba"
    rng = np.random.default_rng(args.seed)
    print(f"backend: {backend()}")
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, inputs in cases(rng).items():
        ref = kernels.NUMPY_KERNELS[name](*inputs)
        t_np = best_of(kernels.NUMPY_KERNELS[name], inputs, args.repeat)
        if use_numba:
            got = kernels.NUMBA_KERNELS[name](*inputs)
            if not np.array_equal(np.asarray(ref), np.asarray(got)):
                raise SystemExit(f"{name}: numpy and numba results differ")
            t_nb = best_of(kernels.NUMBA_KERNELS[name], inputs, args.repeat)
            print(f"{name:<24}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<24}{1e3 * t_np:>12.2f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
