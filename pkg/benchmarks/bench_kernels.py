"""Benchmark the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--constraints N ...] [--d N ...]

Times the gradient kernel (the training hot loop) on random constraint
batches for both backends and prints a speedup table.  The first numba call
is excluded (JIT compilation).
"""

import argparse
import time

import numpy as np

from rtge import kernels
from rtge.model import HyperParams, init


def make_problem(num_entities, num_relations, num_bins, d, num_constraints, seed=0):
    rng = np.random.default_rng(seed)
    hp = HyperParams(d=d)
    state = init(num_entities, num_relations, num_bins, hp, seed)
    bins = rng.integers(num_bins, size=num_constraints).astype(np.int64)

    def triples():
        return np.column_stack([
            rng.integers(num_entities, size=num_constraints),
            rng.integers(num_relations, size=num_constraints),
            rng.integers(num_entities, size=num_constraints),
        ]).astype(np.int64)

    return (state.entity_table, state.relation_table, state.hyperplanes,
            bins, triples(), triples(), triples(), hp.gamma, hp.beta, True)


def best_of(fn, args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--constraints", type=int, nargs="+",
                        default=[1000, 5000, 20000, 80000])
    parser.add_argument("--d", type=int, nargs="+", default=[32, 128])
    parser.add_argument("--entities", type=int, default=2000)
    parser.add_argument("--relations", type=int, default=50)
    parser.add_argument("--bins", type=int, default=40)
    args = parser.parse_args()

    if not kernels.HAS_NUMBA:
        raise SystemExit("numba backend unavailable (TKGE_BACKEND=numpy or numba missing)")

    print(f"{'C':>8} {'d':>5} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>8}")
    for d in args.d:
        for c in args.constraints:
            problem = make_problem(args.entities, args.relations, args.bins, d, c)
            kernels.task_gradients_numba(*problem)  # compile
            t_np = best_of(kernels.task_gradients_numpy, problem)
            t_nb = best_of(kernels.task_gradients_numba, problem)
            # sanity: both backends agree on this problem
            g_np = kernels.task_gradients_numpy(*problem)[0]
            g_nb = kernels.task_gradients_numba(*problem)[0]
            assert np.max(np.abs(g_np - g_nb)) < 1e-10
            print(f"{c:>8} {d:>5} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
                  f"{t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
