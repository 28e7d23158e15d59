"""Unconstrained single-well search on uniform grids versus the step family.

Usage: python scripts/grid_confirmation.py [--M 50] [--cells 8 16 32 64]
"""

import argparse
import time

from gapkit import minimize_single_well_grid, minimize_step_family


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=float, default=50.0)
    ap.add_argument("--cells", type=int, nargs="+", default=[8, 16, 32, 64])
    args = ap.parse_args()

    ref = minimize_step_family(args.M)
    print(f"step family: Gamma* = {ref.gamma_star:.6f} at x_minus = {ref.params['x_minus']:.6f}")
    print(f"{'cells':>6} {'Gamma':>10} {'excess':>10} {'L1 to step':>11} {'step x':>8} {'seconds':>8}")
    for n in args.cells:
        t0 = time.perf_counter()
        rep = minimize_single_well_grid(args.M, n)
        dt = time.perf_counter() - t0
        near = rep.params["nearest_step"]
        print(f"{n:6d} {rep.gamma_star:10.6f} {rep.gamma_star - ref.gamma_star:10.2e} "
              f"{rep.params['l1_to_step']:11.4f} {near['x_minus']:8.4f} {dt:8.1f}")


if __name__ == "__main__":
    main()
