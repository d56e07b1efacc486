"""Time the compiled metric-trace kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--windows 2000] [--repeat 3]

Prints microseconds per window for each detector and the speedup. Both
implementations are run on the same stream and starting vectors, and their
outputs are checked for agreement before timing.
"""

import argparse
import time

import numpy as np

from jass import _kernels_py

try:
    from jass import _kernels
except ImportError:
    _kernels = None


def make_case(B, K, I, L, seed):
    rng = np.random.default_rng(seed)

    def crandn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    y = crandn(B, L + K) + np.sqrt(1000.0) * crandn(B, I) @ crandn(I, L + K)
    s = crandn(K)
    starts = crandn(L + 1, I, B)
    return y, s, starts


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--windows", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--b", type=int, default=16)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--i-hat", type=int, default=4)
    p.add_argument("--t-max", type=int, default=4)
    args = p.parse_args(argv)

    L = args.windows - 1
    y, s, starts = make_case(args.b, args.k, args.i_hat, L, seed=0)
    calls = {
        "unmitigated": lambda m: m.trace_unmitigated(y, s, L),
        "jass": lambda m: m.trace_jass(y, s, L, starts, args.t_max, True),
        "bajass": lambda m: m.trace_bajass(y, s, L, starts, args.t_max, True),
        "jass_evd": lambda m: m.trace_jass_evd(y, s, L, args.i_hat),
    }
    print(f"B={args.b} K={args.k} I_hat={args.i_hat} t_max={args.t_max} windows={args.windows}")
    if _kernels is None:
        print("compiled extension not built; timing the numpy kernels only")
    print(f"{'detector':12s} {'numpy us/win':>13s} {'compiled us/win':>16s} {'speedup':>8s}")
    for name, call in calls.items():
        t_py, ref = best_time(lambda: call(_kernels_py), args.repeat)
        per_py = 1e6 * t_py / args.windows
        if _kernels is None:
            print(f"{name:12s} {per_py:13.2f} {'-':>16s} {'-':>8s}")
            continue
        t_c, out = best_time(lambda: call(_kernels), args.repeat)
        if not np.allclose(out, ref, rtol=1e-8, atol=1e-12):
            raise SystemExit(f"{name}: compiled and numpy traces disagree")
        per_c = 1e6 * t_c / args.windows
        print(f"{name:12s} {per_py:13.2f} {per_c:16.2f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
