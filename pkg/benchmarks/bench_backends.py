#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_backends.py [--n 2000] [--repeat 5]

Each case runs once per backend to warm up (numba compiles on first call),
then reports the best of ``--repeat`` timings and checks the two backends
agree to 1e-10.
"""
import argparse
import time

import numpy as np

from rdwate import _accel
from rdwate.bandwidth import couple_bandwidths, cv_curve, default_grid
from rdwate.estimators import point_fit
from rdwate.kernels import KernelSpec
from rdwate.simulation import generate_setting2
from rdwate.weights import Estimand, WeightScheme


def best_of(fn, repeat):
    fn()  # warm-up / JIT
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n):
    ds = generate_setting2(n, 1.0, 12345)
    kernel = KernelSpec.TRIANGULAR
    rng = np.random.default_rng(0)
    s = np.column_stack([rng.standard_normal(n), rng.uniform(-1, 1, n)])
    s = s[np.argsort(s[:, 0])]
    q = np.column_stack([rng.standard_normal(n), np.zeros(n)])
    bw = np.array([0.3, 0.5])
    grid = default_grid(ds)
    bws = couple_bandwidths(0.5, False, ds.x.std(ddof=1))
    scheme = WeightScheme(Estimand.W1)
    return {
        "product_kde_sums": lambda: _accel.product_kde_sums(q, s, bw, kernel.code, presorted=True),
        "cv_curve(20 h)": lambda: cv_curve(ds, kernel, grid),
        "w1 point estimate": lambda: np.array([point_fit(ds, scheme, kernel, bws).tau]),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'case':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    original = _accel.get_backend()
    try:
        for name, fn in cases(args.n).items():
            _accel.set_backend("numpy")
            t_np, out_np = best_of(fn, args.repeat)
            _accel.set_backend("numba")
            t_nb, out_nb = best_of(fn, args.repeat)
            agree = np.allclose(out_np, out_nb, rtol=1e-10, atol=1e-10, equal_nan=True)
            print(f"{name:<22}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x  {agree}")
    finally:
        _accel.set_backend(original)


if __name__ == "__main__":
    main()
