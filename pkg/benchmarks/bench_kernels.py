"""Time the fused GRU kernels: numba against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Shapes follow the model: word-level runs are many short padded paragraphs,
paragraph-level runs are one short sequence.
"""
import argparse
import time

import numpy as np

from hiersatire.numgrad import kernels

SHAPES = {
    "word (16x128x160 -> 60)": (16, 128, 160, 60),
    "word small (4x12x16 -> 8)": (4, 12, 16, 8),
    "paragraph (1x16x120 -> 60)": (1, 16, 120, 60),
}


def setup(B, T, D, H, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(B, T, D))
    lengths = rng.integers(1, T + 1, size=B).astype(np.int64)
    ws = [rng.normal(0, 0.1, s) for s in [(D, H)] * 3 + [(H, H)] * 3 + [(H,)] * 3]
    return X, lengths, ws


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(backend, X, lengths, ws, repeat):
    k = kernels.kernels(backend)
    H, *cache = k["gru_forward"](X, lengths, *ws, False)  # also triggers compilation
    dH = np.ones_like(H)
    k["gru_backward"](dH, X, lengths, *ws[:6], *cache, False)
    fwd = best_of(lambda: k["gru_forward"](X, lengths, *ws, False), repeat)
    bwd = best_of(lambda: k["gru_backward"](dH, X, lengths, *ws[:6], *cache, False), repeat)
    return fwd, bwd, H


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])
    print(f"{'shape':30s} {'backend':8s} {'forward ms':>11s} {'backward ms':>12s}")
    for label, shape in SHAPES.items():
        X, lengths, ws = setup(*shape)
        outs = {}
        for b in backends:
            fwd, bwd, outs[b] = bench(b, X, lengths, ws, args.repeat)
            print(f"{label:30s} {b:8s} {1e3 * fwd:11.3f} {1e3 * bwd:12.3f}")
        if len(outs) == 2:
            diff = np.abs(outs["numpy"] - outs["numba"]).max()
            print(f"{'':30s} max |numpy - numba| = {diff:.1e}")


if __name__ == "__main__":
    main()
