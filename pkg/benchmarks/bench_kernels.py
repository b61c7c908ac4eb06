#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--quick]

Covers the three hot paths: row normalization + cosine matrix, fused
argmax retrieval, and the Monte Carlo objective pass. The numpy fallback
leans on BLAS for the batch paths (so it can win on huge galleries) while
the compiled path wins decisively on the sampler-bound Monte Carlo loop.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from oscope._kernels import pyfallback
from oscope._kernels import _ckernels as compiled
from oscope._kernels.tables import F_TABLE, X_TABLE


def _time(fn, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_cosine(n_q: int, n_g: int, dim: int) -> dict[str, float]:
    rng = np.random.default_rng(0)
    q = rng.standard_normal((n_q, dim)).astype(np.float32)
    g = rng.standard_normal((n_g, dim)).astype(np.float32)
    qc, _ = compiled.unit_rows(q)
    gc, _ = compiled.unit_rows(g)
    return {
        "compiled": _time(lambda: compiled.cosine_kernel(qc, gc)),
        "python": _time(lambda: pyfallback.cosine_kernel(qc, gc)),
    }


def bench_retrieve(n_q: int, n_g: int, dim: int) -> dict[str, float]:
    rng = np.random.default_rng(1)
    q = rng.standard_normal((n_q, dim)).astype(np.float32)
    g = rng.standard_normal((n_g, dim)).astype(np.float32)
    qc, _ = compiled.unit_rows(q)
    gc, _ = compiled.unit_rows(g)
    assert np.array_equal(compiled.retrieve_kernel(qc, gc), pyfallback.retrieve_kernel(qc, gc))
    return {
        "compiled": _time(lambda: compiled.retrieve_kernel(qc, gc)),
        "python": _time(lambda: pyfallback.retrieve_kernel(qc, gc)),
    }


def bench_mc(trials: int, d: int, b: int) -> dict[str, float]:
    return {
        "compiled": _time(
            lambda: compiled.mc_pair_pass(3, 0, trials, d, 8, b, False, X_TABLE, F_TABLE), repeat=1
        ),
        "python": _time(lambda: pyfallback.mc_pair_pass(3, 0, trials, d, 8, b, False), repeat=1),
    }


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = parser.parse_args()

    scale = 4 if args.quick else 1
    rows = []
    rows.append(("cosine 2000x90 d=256", bench_cosine(2000 // scale, 90, 256)))
    rows.append(("cosine 512x4096 d=512", bench_cosine(512 // scale, 4096 // scale, 512)))
    rows.append(("retrieve 2000x90 d=256", bench_retrieve(2000 // scale, 90, 256)))
    rows.append(("retrieve 1000x10000 d=256", bench_retrieve(1000 // scale, 10000 // scale, 256)))
    rows.append(("mc pass 200 trials d=16384 b=15", bench_mc(200 // scale, 16384, 15)))
    rows.append(("mc pass 50 trials d=16384 b=127", bench_mc(max(1, 50 // scale), 16384, 127)))

    width = max(len(name) for name, _ in rows)
    print(f"{'kernel':<{width}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
    for name, res in rows:
        ratio = res["python"] / res["compiled"]
        print(f"{name:<{width}}  {res['compiled']:>9.4f}s  {res['python']:>9.4f}s  {ratio:>7.1f}x")


if __name__ == "__main__":
    main()
