#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times one full optimizer step (moment update, bias correction, trust-region
scaling, parameter write) per backend over a range of parameter counts.
The two backends are bit-identical in output; this script is only about
speed, so take the speedup column with the usual single-machine caveats.

Usage:
    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --sizes 1e3,1e5,1e7 --repeats 100
"""

import argparse
import time

import numpy as np

from soaa import SOAA, Adam, available_backends, set_backend


def parse_sizes(text):
    return [int(float(tok)) for tok in text.split(",") if tok.strip()]


def time_step(make_opt, n, repeats, seed=0):
    """Median per-step time in microseconds for an optimizer on n params."""
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(n)
    opt = make_opt(theta)
    grads = [rng.standard_normal(n) for _ in range(4)]
    for g in grads:  # warmup: triggers JIT compile on the numba path
        opt.step(g, loss=1.0)
    samples = []
    for i in range(repeats):
        g = grads[i % len(grads)]
        start = time.perf_counter()
        opt.step(g, loss=1.0)
        samples.append(time.perf_counter() - start)
    return float(np.median(samples)) * 1e6


def bench(sizes, repeats):
    backends = available_backends()
    if "numba" not in backends:
        print("note: numba unavailable, timing the numpy fallback only")

    optimizers = {
        "soaa": lambda theta: SOAA(theta, alpha=1e-3),
        "adam": lambda theta: Adam(theta, alpha=1e-3),
    }

    for label, make_opt in optimizers.items():
        print(f"\n{label} step time (median of {repeats}, microseconds)")
        header = f"{'n':>10}" + "".join(f"{b:>12}" for b in backends)
        if len(backends) == 2:
            header += f"{'speedup':>10}"
        print(header)
        print("-" * len(header))
        for n in sizes:
            row = f"{n:>10}"
            times = {}
            for backend in backends:
                set_backend(backend)
                times[backend] = time_step(make_opt, n, repeats)
                row += f"{times[backend]:>12.1f}"
            if len(backends) == 2:
                row += f"{times['numpy'] / times['numba']:>9.1f}x"
            print(row)
    set_backend("auto")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=parse_sizes,
                        default=[1_000, 10_000, 100_000, 1_000_000],
                        help="comma-separated parameter counts (default 1e3..1e6)")
    parser.add_argument("--repeats", type=int, default=200,
                        help="timed steps per cell (default 200)")
    args = parser.parse_args()
    bench(args.sizes, args.repeats)


if __name__ == "__main__":
    main()
