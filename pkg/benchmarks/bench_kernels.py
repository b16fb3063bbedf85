"""Benchmark the solver kernels: numba JIT vs pure-numpy fallback.

Run:
    python benchmarks/bench_kernels.py

Workloads mirror what the generators actually do: solve many random
knights-and-knaves statement sets, and re-solve a 4x4 zebra instance once
per candidate clue (the greedy minimization loop).
"""

from __future__ import annotations

import random
import time

import numpy as np

from logicpool.puzzles import _kernels
from logicpool.puzzles.knights import sample_statement
from logicpool.puzzles.statements import compile_statements
from logicpool.puzzles.zebra import _all_true_clues, _encode_clues, _position_table, ZebraGrid


def bench(label: str, func, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - start)
    print(f"  {label:18s} {best * 1000:9.2f} ms")
    return best


def kk_workload(n_puzzles: int = 300, n_chars: int = 6):
    rng = random.Random(0)
    compiled = []
    for _ in range(n_puzzles):
        statements = [sample_statement(rng, n_chars) for _ in range(n_chars)]
        compiled.append(compile_statements(statements, n_chars))

    def run(kernel):
        def inner():
            total = 0
            for code, bounds in compiled:
                total += len(kernel(code, bounds, n_chars))
            return total

        return inner

    print(f"knights-and-knaves: {n_puzzles} random {n_chars}-character instances")
    results = {}
    if _kernels._HAVE_NUMBA:
        run(_kernels._kk_masks_jit)()  # warm the JIT outside the timer
        results["numba"] = bench("numba", run(_kernels._kk_masks_jit))
    results["numpy"] = bench("numpy", run(_kernels._kk_masks_numpy))
    return results


def zebra_workload(n_houses: int = 4, n_attrs: int = 4):
    rng = random.Random(0)
    perms = [tuple(rng.sample(range(n_houses), n_houses)) for _ in range(n_attrs)]
    grid = ZebraGrid(tuple(perms))
    clues = _all_true_clues(grid, n_houses, n_attrs)
    _, pos = _position_table(n_houses)
    encoded = _encode_clues(clues)

    def run(kernel):
        def inner():
            # one re-solve per dropped clue, like the minimization pass
            for drop in range(encoded.shape[0]):
                subset = np.delete(encoded, drop, axis=0)
                kernel(pos, subset, n_attrs, 2)

        return inner

    print(f"zebra: {encoded.shape[0]} clue-removal re-solves on a {n_houses}x{n_attrs} grid")
    results = {}
    if _kernels._HAVE_NUMBA:
        run(_kernels._zebra_search_jit)()
        results["numba"] = bench("numba", run(_kernels._zebra_search_jit))
    results["numpy"] = bench("numpy", run(_kernels._zebra_search_numpy))
    return results


def main() -> None:
    print(f"active backend: {_kernels.active_backend()}")
    kk = kk_workload()
    zebra = zebra_workload()
    for name, results in (("kk", kk), ("zebra", zebra)):
        if "numba" in results:
            print(f"{name}: numba is {results['numpy'] / results['numba']:.1f}x faster than numpy")


if __name__ == "__main__":
    main()
