"""Time the gamma-table sweep and the simulation kernel on each available backend.

    python3 benchmarks/bench_kernels.py [--h 16] [--T 1000000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from switchcert import _backend
from switchcert.lifting import build_gamma_tables
from switchcert.ncs import EXAMPLE1_K, build_two_channel, example1_plant, EXAMPLE2_KD
from switchcert.signals import gilbert_elliott, sample_signal, simulate_lognorm


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=int, default=12)
    ap.add_argument("--T", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    system, _ = build_two_channel(example1_plant(), EXAMPLE1_K, EXAMPLE2_KD, (0, 0.4, 0, 0.5))
    signal = sample_signal(gilbert_elliott(0.5, 0.5, 0.05, 0.9), args.T, seed=0)
    x0 = np.ones(system.n)

    print(f"{'kernel':<22}{'backend':<10}{'seconds':>10}")
    results = {}
    for name in _backend.available():
        t_gamma = best_of(lambda: build_gamma_tables(system, args.h, workers=1, backend=name), args.repeat)
        t_sim = best_of(lambda: simulate_lognorm(system, signal, x0, backend=name), args.repeat)
        results[name] = (t_gamma, t_sim)
        print(f"{f'gamma h={args.h} M=3':<22}{name:<10}{t_gamma:>10.3f}")
        print(f"{f'simulate T={args.T}':<22}{name:<10}{t_sim:>10.3f}")
    if len(results) == 2:
        g = results["python"][0] / results["compiled"][0]
        s = results["python"][1] / results["compiled"][1]
        print(f"speedup: gamma {g:.1f}x, simulate {s:.1f}x")


if __name__ == "__main__":
    main()
