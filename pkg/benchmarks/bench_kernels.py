#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from resmbs._kernels import _pure

try:
    from resmbs._kernels import _speedups
except ImportError:
    _speedups = None


def estep_workload(seed=0, n_docs=500, K=10, W=200, mean_tokens=30):
    rng = np.random.default_rng(seed)
    beta = np.ascontiguousarray(rng.dirichlet(np.ones(W), size=K))
    ids, cts, offsets = [], [], [0]
    for _ in range(n_docs):
        nd = int(rng.integers(mean_tokens // 2, mean_tokens * 2))
        nd = min(nd, W)
        ids.append(rng.choice(W, size=nd, replace=False).astype(np.int32))
        cts.append(rng.integers(1, 5, size=nd).astype(float))
        offsets.append(offsets[-1] + nd)
    gamma = rng.gamma(100.0, 0.01, (n_docs, K))
    args = (np.concatenate(ids), np.concatenate(cts), np.array(offsets, dtype=np.int64), beta)
    return args, gamma


def cd_workload(seed=0, n=5000, p=120):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray((rng.random((n, p)) < 0.25).astype(float))
    beta_true = rng.normal(size=p) * (rng.random(p) < 0.2)
    y = (rng.random(n) < 1 / (1 + np.exp(-(X @ beta_true - 0.5)))).astype(float)
    curv = np.maximum((X**2).sum(axis=0) / (4 * n), 1e-12)
    return X, y, curv


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    impls = [("pure", _pure)]
    if _speedups is not None:
        impls.append(("compiled", _speedups))
    else:
        print("compiled kernels not built; benchmarking the fallback only")

    print(f"{'kernel':<28}{'impl':<10}{'best (ms)':>12}{'speedup':>10}")
    (estep_args, gamma0) = estep_workload()
    baseline = None
    for name, impl in impls:
        def run_estep():
            gamma = gamma0.copy()
            impl.lda_estep(*estep_args, 0.1, gamma, 50, 1e-6)

        t = bench(run_estep, args.repeat) * 1e3
        speedup = "" if baseline is None else f"{baseline / t:8.1f}x"
        baseline = baseline or t
        print(f"{'lda_estep (500x10x200)':<28}{name:<10}{t:>12.2f}{speedup:>10}")

    X, y, curv = cd_workload()
    active = np.ones(X.shape[1], dtype=np.uint8)
    baseline = None
    for name, impl in impls:
        def run_cd():
            beta = np.zeros(X.shape[1])
            impl.logistic_cd(X, y, beta, 0.0, 0.002, curv, active, 60, 0.0)

        t = bench(run_cd, args.repeat) * 1e3
        speedup = "" if baseline is None else f"{baseline / t:8.1f}x"
        baseline = baseline or t
        print(f"{'logistic_cd (5000x120)':<28}{name:<10}{t:>12.2f}{speedup:>10}")


if __name__ == "__main__":
    main()
