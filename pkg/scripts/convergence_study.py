"""Observed temporal and spatial convergence order of the propagator.

For step sizes {4h, 2h, h} (grid fixed) and grid spacings {4dx, 2dx, dx}
(step fixed) the ratio of successive differences of the final fields should
approach 4 for a second-order scheme.

    python scripts/convergence_study.py [--tau 0.5] [--levels 4]
"""

import argparse

import numpy as np

from hybridbec.grid import build_grid, initial_gaussian
from hybridbec.propagator import StepSettings, evolve
from hybridbec.units import DimensionlessParams

PARAMS = DimensionlessParams(g_a=20, g_m=20, g_am=20, chi_t=50, eps_t=50,
                             alpha_t=0.1, g1_t=0.1, g2_t=1.0)


def final(nx, h, tau):
    grid = build_grid(nx, 8.0)
    rec = evolve(initial_gaussian(grid, 1.0, 0.8, 0.3), PARAMS, grid,
                 StepSettings(dtau=h, series_stride=10**9), tau)
    return rec.snapshots[-1]


def diff(coarse, fine, stride):
    sl = slice(stride - 1, None, stride)
    return max(np.max(np.abs(coarse.phi_a - fine.phi_a[sl])),
               np.max(np.abs(coarse.phi_m - fine.phi_m[sl])))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()

    steps = [4e-3 / 2**k for k in range(args.levels)]
    runs = [final(256, h, args.tau) for h in steps]
    d = [diff(a, b, 1) for a, b in zip(runs, runs[1:])]
    print("time step   difference   ratio")
    for k, h in enumerate(steps[1:]):
        ratio = d[k - 1] / d[k] if k else float("nan")
        print(f"{h:9.2e}   {d[k]:10.3e}   {ratio:5.2f}")

    sizes = [64 * 2**k for k in range(args.levels)]
    runs = [final(nx, 1e-4, args.tau) for nx in sizes]
    d = [diff(a, b, 2) for a, b in zip(runs, runs[1:])]
    print("\ngrid points   difference   ratio")
    for k, nx in enumerate(sizes[1:]):
        ratio = d[k - 1] / d[k] if k else float("nan")
        print(f"{nx:11d}   {d[k]:10.3e}   {ratio:5.2f}")


if __name__ == "__main__":
    main()
