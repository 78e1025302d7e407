"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np


def load_backends():
    backends = {}
    from salientlights.backend import _kernels_py
    backends["python"] = _kernels_py
    try:
        kernels = importlib.import_module("salientlights.backend._kernels")
        backends["cython"] = kernels
    except ImportError:
        print("compiled extension not available; benchmarking fallback only")
    return backends


def random_boxes(rng: np.random.Generator, n: int) -> np.ndarray:
    x0 = rng.uniform(0, 3, n)
    y0 = rng.uniform(0, 3, n)
    return np.stack([x0, y0, x0 + rng.uniform(0.2, 2, n),
                     y0 + rng.uniform(0.2, 2, n)], axis=1)


def bench(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    backends = load_backends()

    a = random_boxes(rng, 512)
    b = random_boxes(rng, 256)
    logits = rng.uniform(-15, 15, 200_000)
    is_object = rng.random(logits.shape[0]) < 0.05
    weights = np.where(rng.random(logits.shape[0]) < 0.3, 4.0, 1.0)
    ious = rng.random((200, 200))
    order = rng.permutation(200).astype(np.int64)

    cases = {
        "pairwise_iou 512x256":
            lambda k: k.pairwise_iou(a, b),
        "focal_terms 200k":
            lambda k: k.focal_terms(logits, is_object, weights, 0.25, 2.0, 1e-12),
        "greedy_assign 200x200":
            lambda k: k.greedy_assign(order, ious, 0.5),
    }

    print(f"{'case':24} " + " ".join(f"{name:>12}" for name in backends))
    for label, call in cases.items():
        times = [bench(lambda k=kernel: call(k), args.repeats)
                 for kernel in backends.values()]
        row = " ".join(f"{t * 1e3:10.3f}ms" for t in times)
        print(f"{label:24} {row}")
        if len(times) == 2:
            py, cy = times[0], times[1]
            print(f"{'':24} {'':>12} {py / cy:>10.1f}x")


if __name__ == "__main__":
    main()
