"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit
from fractions import Fraction

import numpy as np

from clique_memory import _backend
from clique_memory.model import ModelParams, flat_units, sample_messages, substream
from clique_memory.network import count_dtype


def cases(l, c, alpha, seed=0):
    p = ModelParams.from_alpha(l, c, alpha, kappa=Fraction(c - 1, c))
    rng = substream(seed)
    units = np.ascontiguousarray(flat_units(sample_messages(p, rng), l))
    W = np.zeros((p.N, p.N), dtype=count_dtype(p.M))
    _backend.pykernels.accumulate_counts(W, units)
    bits = (W > 0).astype(np.uint8)
    v = (rng.random(p.N) < 0.05).astype(np.uint8)

    def fresh(k):
        out = np.zeros_like(W)
        k.accumulate_counts(out, units)

    return p, {
        "accumulate_counts": lambda k: fresh(k),
        "fields": lambda k: k.fields(W, v),
        "sweep_sequential": lambda k: k.sweep_sequential(W, v, p.fire_level),
        "gb_step": lambda k: k.gb_step(bits, v, p.c, p.l),
        "count_unstable": lambda k: k.count_unstable(W, units, p.fire_level),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _backend.ckernels is None:
        raise SystemExit("compiled kernels not built; reinstall without CLIQUE_MEMORY_NO_EXT")
    print(f"{'size':>16} {'kernel':>18} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for l, c, alpha in [(64, 5, 0.05), (256, 6, 0.05), (512, 7, 0.02)]:
        p, fns = cases(l, c, alpha)
        for name, fn in fns.items():
            n = 3
            py = min(timeit.repeat(lambda: fn(_backend.pykernels), number=n, repeat=args.repeat)) / n
            cy = min(timeit.repeat(lambda: fn(_backend.ckernels), number=n, repeat=args.repeat)) / n
            print(f"{f'l={l} c={c} M={p.M}':>16} {name:>18} {py * 1e3:10.3f} {cy * 1e3:10.3f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
