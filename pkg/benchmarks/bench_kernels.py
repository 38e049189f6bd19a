"""Timing comparison of the two kernel backends.

The package selects between a numba-jitted path and a pure-numpy path at
import time (RNEWTON_PURE_NUMPY=1 forces the latter); this script times
both implementations side by side in one process and checks that they
agree on the stream contents.

Usage: python benchmarks/bench_kernels.py [--count N] [--basis K,DIM]
"""

import argparse
import time

import numpy as np

from rnewton.kernels import _numpy_impl

try:
    from rnewton.kernels import _numba_impl
except ImportError:
    _numba_impl = None


def best_of(fn, repeats=5):
    fn()  # warmup; also triggers jit compilation on the numba path
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=1_000_000,
                        help="stream length for the generator kernels")
    parser.add_argument("--basis", default="200,400",
                        help="K,DIM shape for the orthonormalization kernel")
    args = parser.parse_args()

    count = args.count
    k, dim = (int(v) for v in args.basis.split(","))
    state = np.uint64(12345)
    rows = np.random.default_rng(0).standard_normal((k, dim))

    cases = [
        ("raw_stream", lambda impl: impl.raw_stream(state, count)),
        ("uniforms", lambda impl: impl.uniforms(state, count)),
        ("normal_pairs", lambda impl: impl.normal_pairs(state, count // 2)),
        ("mgs_rows", lambda impl: impl.mgs_rows(rows, 1e-12)),
    ]

    backends = [("numpy", _numpy_impl)]
    if _numba_impl is not None:
        backends.append(("numba", _numba_impl))
    else:
        print("numba not importable; timing the numpy path only")

    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name, _ in backends)
          + ("" if _numba_impl is None else f"{'speedup':>10}"))
    for label, call in cases:
        times = [best_of(lambda impl=impl: call(impl)) for _, impl in backends]
        line = f"{label:<14}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2 and times[1] > 0:
            line += f"{times[0] / times[1]:>9.2f}x"
        print(line)

    if _numba_impl is not None:
        a, _ = _numpy_impl.uniforms(state, 10_000)
        b, _ = _numba_impl.uniforms(state, 10_000)
        same = np.array_equal(a, b)
        print(f"uniform streams bit-identical across backends: {same}")


if __name__ == "__main__":
    main()
