"""Compare the compiled and pure-Python kernels on SA sweeps and planted edge sampling.

    python3 benchmarks/bench_kernels.py [--n 2000] [--c 13.0] [--repeat 5]
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from pottscolor import _kernels_py
from pottscolor.graph import edge_count, generate_planted
from pottscolor.potts import conflict_count


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_sweep(mod, g, q, n_sweeps, repeat):
    rng = np.random.default_rng(0)
    n = g.n_nodes
    draws = [(rng.integers(0, n, n), rng.integers(1, q, n), rng.random(n)) for _ in range(n_sweeps)]
    start = rng.integers(0, q, n).astype(np.int64)

    def run():
        colors = start.copy()
        e = conflict_count(g, colors)
        for nodes, shifts, u in draws:
            e, _, _ = mod.sa_sweep(g.csr_offsets, g.csr_neighbors, colors, nodes, shifts, u, q, 2.0, e)

    return _best(run, repeat) / n_sweeps


def bench_accept(mod, colors, m, repeat):
    rng = np.random.default_rng(1)
    n = len(colors)
    pairs = rng.integers(0, n, (3 * m, 2)).astype(np.int64)

    def run():
        out = np.zeros((m, 2), dtype=np.int64)
        mod.accept_pairs(colors, pairs, out, 0, m, 0, 1000 * m)

    return _best(run, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--c", type=float, default=13.0)
    ap.add_argument("--q", type=int, default=5)
    ap.add_argument("--sweeps", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = {"python": _kernels_py}
    try:
        backends["cython"] = importlib.import_module("pottscolor._kernels")
    except ImportError:
        print("compiled extension not available; timing the Python fallback only")

    g, planted = generate_planted(args.n, args.c, args.q, seed=0)
    m = edge_count(args.n, args.c)
    print(f"graph: n={args.n} c={args.c} q={args.q} m={m}")
    print(f"{'kernel':<14} {'backend':<8} {'seconds':>12}")
    results = {}
    for name, mod in backends.items():
        results[("sa_sweep", name)] = bench_sweep(mod, g, args.q, args.sweeps, args.repeat)
        results[("accept_pairs", name)] = bench_accept(mod, planted.colors, m, args.repeat)
    for (kernel, name), t in results.items():
        print(f"{kernel:<14} {name:<8} {t:>12.6f}")
    if "cython" in backends:
        for kernel in ("sa_sweep", "accept_pairs"):
            ratio = results[(kernel, "python")] / results[(kernel, "cython")]
            print(f"{kernel}: compiled is {ratio:.1f}x faster")


if __name__ == "__main__":
    main()
