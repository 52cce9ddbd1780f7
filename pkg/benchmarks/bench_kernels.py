"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Each kernel is run on the same inputs with both backends; the script checks
that the outputs agree before reporting the best-of-``repeat`` wall times.
"""
import argparse
import timeit

import numpy as np

from hdgmm import _pykernels

try:
    from hdgmm import _ckernels
except ImportError:
    _ckernels = None


def cases(rng, scale):
    n = max(int(20_000 * scale), 10)
    M, d, K = 64, 8, 8
    X = np.ascontiguousarray(rng.standard_normal((n, M)))
    q = rng.standard_normal(M)
    proj = np.ascontiguousarray(rng.standard_normal((n, d)))
    sq = np.einsum("ij,ij->i", X, X)
    inv_a = 1.0 / rng.uniform(2.0, 10.0, d)
    logp = np.ascontiguousarray(rng.standard_normal((n, K)) * 30.0)
    C = np.ascontiguousarray(rng.standard_normal((K, M)))
    coords = np.ascontiguousarray(rng.standard_normal((n // K, d)))
    return {
        "spiked_quadform": (sq, proj, inv_a, 1.0),
        "normalize_log_rows": (logp,),
        "argmax_dot": (X, q),
        "nearest_row": (coords, q[:d].copy()),
        "assign_nearest": (X, C),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--scale", type=float, default=1.0, help="multiplies the record count")
    args = parser.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'python (ms)':>14}{'cython (ms)':>14}{'speed-up':>10}")
    for name, inputs in cases(rng, args.scale).items():
        py = getattr(_pykernels, name)
        t_py = min(timeit.repeat(lambda: py(*inputs), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<20}{t_py:>14.3f}{'-':>14}{'-':>10}")
            continue
        cy = getattr(_ckernels, name)
        if not _same(py(*inputs), cy(*inputs)):
            raise SystemExit(f"{name}: backends disagree")
        t_cy = min(timeit.repeat(lambda: cy(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<20}{t_py:>14.3f}{t_cy:>14.3f}{t_py / t_cy:>9.2f}x")


if __name__ == "__main__":
    main()
