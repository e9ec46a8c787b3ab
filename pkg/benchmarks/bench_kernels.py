"""Time the numba kernels against their pure-numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py [--n 257] [--repeat 5]

Each kernel is called once untimed (jit warm-up), then the best of
``--repeat`` runs is reported together with the max difference between the
two backends.
"""
import argparse
import time

import numpy as np

from npesim import kernels
from npesim._accel import HAVE_NUMBA


def _best(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _maxdiff(a, b):
    if isinstance(a, tuple):
        return max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
    return float(np.max(np.abs(a - b)))


def cases(n, rng):
    L = 1.0
    h = L / (n - 1)
    x = np.linspace(0.0, L, n)
    X, Y = np.meshgrid(x, x)
    f = np.sin(np.pi * X) * np.cos(2 * np.pi * Y)
    ux = -np.pi * np.sin(np.pi * X) * np.cos(np.pi * Y)
    uy = np.pi * np.cos(np.pi * X) * np.sin(np.pi * Y)
    phi = 3.0 * X * Y + np.sin(np.pi * X)
    px = rng.random(n * n)
    py = rng.random(n * n)
    s = rng.normal(scale=5.0, size=n * n)
    c = 1.0 + 0.5 * f
    dt = 0.2 * h
    return {
        "bernoulli": (kernels.bernoulli_nb, kernels.bernoulli_np, (s,)),
        "bilinear": (kernels.bilinear_nb, kernels.bilinear_np, (f, h, h, px, py)),
        "cubic": (kernels.cubic_nb, kernels.cubic_np, (f, h, h, px, py)),
        "trace_feet": (kernels.trace_feet_nb, kernels.trace_feet_np, (ux, uy, x, x, L, L, dt)),
        "upwind": (kernels.upwind_nb, kernels.upwind_np, (c, ux, uy, dt, h, h)),
        "sg_stencil": (kernels.sg_stencil_nb, kernels.sg_stencil_np, (phi, ux, uy, 1.0, 0.1, h, h, dt, 1.0)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=257)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba unavailable (or NPE_DISABLE_NUMBA set); timing numpy only")
    rng = np.random.default_rng(0)
    print(f"grid {args.n}x{args.n}, best of {args.repeat}")
    print(f"{'kernel':<12}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, (nb, npf, a) in cases(args.n, rng).items():
        t_np = _best(npf, a, args.repeat)
        if HAVE_NUMBA:
            t_nb = _best(nb, a, args.repeat)
            diff = _maxdiff(nb(*a), npf(*a))
            print(f"{name:<12}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}{diff:>12.2e}")
        else:
            print(f"{name:<12}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}{'-':>12}")


if __name__ == "__main__":
    main()
