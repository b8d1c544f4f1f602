"""Time the compiled GF(2) kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 20] [--k 8] [--repeat 5]

Both backends are imported directly, so ``FBLAB_PURE`` has no effect here;
the outputs are compared before anything is timed.
"""

import argparse
import sys
import timeit

import numpy as np

from fblab.gf2 import BitMatrix, _pykernels

try:
    from fblab.gf2 import _kernels as compiled
except ImportError:
    compiled = None


def random_parity_check(n: int, k: int, seed: int) -> BitMatrix:
    g = np.random.default_rng(seed)
    return BitMatrix.from_lists(g.integers(0, 2, size=(k, n)).tolist(), n)


def run_kernels(mod, cols, n, k):
    syn = mod.syndrome_table(cols, n)
    return syn, mod.syndrome_weight_counts(syn, n, k), mod.coset_leader_weights(syn, n, k)


def best_time(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    H = random_parity_check(args.n, args.k, args.seed)
    cols = np.array(H.col_ints(), dtype=np.uint64)
    backends = [("python", _pykernels)] + ([("compiled", compiled)] if compiled is not None else [])

    results = {name: run_kernels(mod, cols, args.n, args.k) for name, mod in backends}
    if compiled is not None and not all(np.array_equal(a, b) for a, b in zip(*results.values())):
        print("backends disagree", file=sys.stderr)
        return 1

    print(f"n={args.n} k={args.k} (2^{args.n} inputs), best of {args.repeat}")
    times = {}
    for name, mod in backends:
        times[name] = best_time(lambda: run_kernels(mod, cols, args.n, args.k), args.repeat)
        print(f"{name:>9}: {times[name] * 1e3:9.2f} ms")
    if compiled is None:
        print("compiled kernels not built; rebuild with `pip install -e . --no-build-isolation`")
    else:
        print(f"  speedup: {times['python'] / times['compiled']:9.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
