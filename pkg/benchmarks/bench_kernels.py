"""Compare the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Times the hot kernels in isolation and one end-to-end oracle call
(``solve_reference`` on the bundled Poincare scenario) under each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hsplit import _kernels_py

try:
    from hsplit import _kernels
except ImportError:
    _kernels = None


def kernel_cases(rng):
    a, b = rng.uniform(-0.5, 0.5, (2, 3))
    A = rng.uniform(-0.5, 0.5, (300, 2))
    from hsplit import MetricTree
    from hsplit.oracle import TreeRegion, sample_point
    names = [f"v{i}" for i in range(30)]
    edges = [[names[int(rng.integers(i))], names[i], 1.0] for i in range(1, 30)]
    T = MetricTree(names, edges)
    pts = T.pack([sample_point(T, TreeRegion(), rng) for _ in range(300)])
    p, q = (sample_point(T, TreeRegion(), rng) for _ in range(2))
    targs = (p.u, p.v, p.offset, T._len(p), q.u, q.v, q.offset, T._len(q), T.D)
    return [
        ("euclid_dist", lambda k: k.euclid_dist(a, b), 20000),
        ("poincare_dist", lambda k: k.poincare_dist(a, b), 20000),
        ("poincare_geodesic", lambda k: k.poincare_geodesic(a, b, 0.3), 20000),
        ("tree_dist", lambda k: k.tree_dist(*targs), 20000),
        ("pairwise_sq_poincare 300x300", lambda k: k.pairwise_sq_poincare(A, A), 5),
        ("pairwise_sq_tree 300x300", lambda k: k.pairwise_sq_tree(*pts, *pts, T.D), 5),
    ]


END_TO_END = (
    "import time, hsplit.cli as c; sc = c.load_scenario('poincare'); t = time.perf_counter(); "
    "c.compute_reference(sc); print(time.perf_counter() - t)"
)


def end_to_end(pure):
    env = dict(os.environ, HS_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True,
                         text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'cython (us)':>12s} {'python (us)':>12s} {'speedup':>8s}")
    for name, fn, number in kernel_cases(rng):
        t = {}
        for label, mod in (("c", _kernels), ("py", _kernels_py)):
            best = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat))
            t[label] = 1e6 * best / number
        print(f"{name:32s} {t['c']:12.2f} {t['py']:12.2f} {t['py'] / t['c']:8.1f}x")
    c = min(end_to_end(False) for _ in range(args.repeat))
    py = min(end_to_end(True) for _ in range(args.repeat))
    print(f"{'solve_reference (poincare)':32s} {1e6 * c:12.0f} {1e6 * py:12.0f} {py / c:8.1f}x")


if __name__ == "__main__":
    main()
