"""Compiled versus pure-Python orbit kernels on a batch of bicharacteristics.

    python3 benchmarks/bench_orbits.py [--count 400] [--repeat 3]
"""

import argparse
import time

import numpy as np

from wfset import _kernels, coeffs


def batch(count, n=1, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (count, n))
    XI = 64.0 * rng.uniform(0.5, 1.5, (count, n))
    return np.hstack([X, XI])


def bench(name, params, Y0, repeat):
    _, run = _kernels.get_backend(name)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        ends, status, _, steps = run(params, 1.0, Y0, 0.0)
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(ends, dtype=float), int(steps)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _kernels.HAVE_EXTENSION:
        raise SystemExit("compiled kernel not built; run `python3 setup.py build_ext --inplace`")
    for label, model in [("bump 1D", coeffs.bump(1, 0.1, 0.1)), ("longrange 2D", coeffs.longrange(2, 0.1, 0.1))]:
        Y0 = batch(args.count, model.n)
        params = model.kernel_params()
        tc, ec, steps = bench("cython", params, Y0, args.repeat)
        tp, ep, _ = bench("python", params, Y0, args.repeat)
        diff = float(np.max(np.abs(ec - ep)))
        print(f"{label:13s} {args.count} orbits, {steps} steps: cython {tc * 1e3:8.2f} ms, "
              f"python {tp * 1e3:9.2f} ms, speed-up {tp / tc:6.1f}x, max diff {diff:.1e}")


if __name__ == "__main__":
    main()
