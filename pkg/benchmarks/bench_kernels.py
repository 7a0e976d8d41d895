"""Numba vs numpy timings of the lead-lag kernels at Table 1 sizes.

    python benchmarks/bench_kernels.py [--repeat 5] [--R 299]

Both backends are called directly, so the env flag is not needed. The first
numba call (compilation, or cache load) is excluded from the timings.
"""

import argparse
import time

import numpy as np

from llgauss import _accel, _kernels
from llgauss.leadlag import LagGrid, draw_multipliers, prepare
from llgauss.rng import Seed
from llgauss.stochastics import LeadLagModel, make_scheme, simulate_leadlag


def best_of(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def scenario(kind, R):
    model = LeadLagModel(0, 0, 1, 1, 0.5, 0.1, 1.0)
    if kind == "sync":
        scheme, step = make_scheme("equidistant", {"h": 1e-3}, 1.0), 1e-3
    else:
        scheme = make_scheme("subsample", {"m": 300, "base_step": 1e-3}, 1.0, Seed(1))
        step = 1e-3
    path = simulate_leadlag(model, scheme, Seed(2))
    p = prepare(path, LagGrid.symmetric(step, 0.3))
    aw = draw_multipliers(Seed(3), R, p.a.size, "rademacher") * p.a[:, None]
    bw = draw_multipliers(Seed(4), R, p.b.size, "rademacher") * p.b[:, None]
    return p, aw, bw


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--R", type=int, default=299)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'scenario':<9} {'kernel':<16} {'numba [ms]':>11} {'numpy [ms]':>11} {'speed-up':>9}")
    for kind in ("sync", "nonsync"):
        p, aw, bw = scenario(kind, args.R)
        pairs_nb = _kernels.build_pairs_nb(p.s, p.u, p.shifts, p.eps)
        pairs_np = _kernels.build_pairs_np(p.s, p.u, p.shifts, p.eps)
        assert all(np.array_equal(x, y) for x, y in zip(pairs_nb, pairs_np))
        cases = {
            "build_pairs": (lambda: _kernels.build_pairs_nb(p.s, p.u, p.shifts, p.eps),
                            lambda: _kernels.build_pairs_np(p.s, p.u, p.shifts, p.eps)),
            "sweep_contrast": (lambda: _kernels.sweep_contrast_nb(p.s, p.u, p.shifts, p.a, p.b, p.eps),
                               lambda: _kernels.sweep_contrast_np(p.s, p.u, p.shifts, p.a, p.b, p.eps)),
            "pair_bootstrap": (lambda: _kernels.pair_bootstrap_nb(*pairs_nb, aw, bw),
                               lambda: _kernels.pair_bootstrap_np(*pairs_np, aw, bw)),
        }
        for name, (fast, slow) in cases.items():
            a = best_of(fast, args.repeat)
            b = best_of(slow, args.repeat)
            print(f"{kind:<9} {name:<16} {1e3 * a:>11.2f} {1e3 * b:>11.2f} {b / a:>8.1f}x")
        n_pairs = int(pairs_nb[0][-1])
        print(f"{'':<9} ({p.a.size}/{p.b.size} intervals, {p.shifts.size} lags, "
              f"{n_pairs} pairs, R={args.R})")


if __name__ == "__main__":
    main()
