"""Benchmark the blockmodel sweep kernel: numba-compiled vs pure Python.

The sweep is the fit's hot loop; both backends share the same function body
(see softspace._kernels), so this measures compilation payoff only. Run:

    python3 benchmarks/bench_sbm_kernels.py [--nodes 200] [--blocks 4]

Full-fit timing with the fallback selected via env flag:

    SOFTSPACE_NUMBA=0 python3 benchmarks/bench_sbm_kernels.py
"""

import argparse
import time

import numpy as np

from softspace import _kernels
from softspace.community import _adjacency, _block_matrix, fit_sbm
from softspace.proximity import ProximityNetwork
from softspace.synthkit import planted_partition_graph


def make_network(n_blocks, block_size, seed=0):
    edges, planted = planted_partition_graph(n_blocks, block_size, 0.3, 0.02, seed)
    nodes = sorted(planted)
    return ProximityNetwork(nodes=nodes, node_attrs={n: {} for n in nodes},
                            edges=edges), planted


def bench_sweep(net, n_blocks, repeats=20):
    nodes, indptr, indices, mult = _adjacency(net, True, 1)
    n = len(nodes)
    rng = np.random.default_rng(0)
    deg = np.array([mult[indptr[i]:indptr[i + 1]].sum() for i in range(n)])
    results = {}
    for name, impl in (("numba", _kernels.sweep_pass),
                       ("python", _kernels.sweep_pass_python)):
        if name == "numba" and _kernels.BACKEND != "numba":
            continue
        # warm up (triggers JIT compilation for the numba path)
        labels = rng.integers(0, n_blocks, size=n).astype(np.int64)
        state = _prepare(indptr, indices, mult, labels, n_blocks, n)
        impl(indptr, indices, mult, deg, *state,
             rng.permutation(n).astype(np.int64), np.zeros(n_blocks), np.empty(n))
        times = []
        for r in range(repeats):
            labels = np.random.default_rng(r).integers(0, n_blocks, size=n).astype(np.int64)
            state = _prepare(indptr, indices, mult, labels, n_blocks, n)
            order = np.random.default_rng(r).permutation(n).astype(np.int64)
            t0 = time.perf_counter()
            impl(indptr, indices, mult, deg, *state, order,
                 np.zeros(n_blocks), np.empty(n))
            times.append(time.perf_counter() - t0)
        results[name] = min(times)
    return results


def _prepare(indptr, indices, mult, labels, n_blocks, n):
    e_mat = _block_matrix(indptr, indices, mult, labels, n_blocks)
    return (labels, np.bincount(labels, minlength=n_blocks).astype(np.int64),
            e_mat, e_mat.sum(axis=1))


def bench_full_fit(net, seed=0, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fit_sbm(net, seed=seed)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=200)
    ap.add_argument("--blocks", type=int, default=4)
    args = ap.parse_args()

    net, _ = make_network(args.blocks, args.nodes // args.blocks)
    print(f"active backend: {_kernels.BACKEND}")
    print(f"graph: {len(net.nodes)} nodes, {len(net.edges)} edges")

    res = bench_sweep(net, args.blocks)
    print("\nsingle sweep pass (best of 20):")
    for name, t in res.items():
        print(f"  {name:>7}: {t * 1e3:8.3f} ms")
    if "numba" in res and "python" in res:
        print(f"  speedup: {res['python'] / res['numba']:.1f}x")

    t = bench_full_fit(net)
    print(f"\nfull fit with active backend: {t:.2f} s")


if __name__ == "__main__":
    main()
