"""Step-family optimum over a log grid of M, with the two-sided bounds on x_minus.

Usage: python scripts/sweep_gap.py [--lo 1] [--hi 1e6] [--n 13] [--csv out.csv]
"""

import argparse
import csv
import math

import numpy as np

from gapkit import minimize_step_family, solve_theta


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=float, default=1.0)
    ap.add_argument("--hi", type=float, default=1e6)
    ap.add_argument("--n", type=int, default=13)
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args()

    limit = solve_theta().limit_gap
    rows = []
    print(f"{'M':>10} {'x_minus*':>14} {'sqrt(M)x*-pi/2':>15} {'lam1-M':>10} {'lam2-M':>10} {'Gamma*':>10}")
    for M in np.geomspace(args.lo, args.hi, args.n):
        r = minimize_step_family(float(M))
        x = r.params["x_minus"]
        row = dict(M=M, x_minus=x, shifted=math.sqrt(M) * x - math.pi / 2, nu1=r.params["nu1"],
                   nu2=r.params["nu2"], gamma=r.gamma_star)
        rows.append(row)
        print(f"{M:10.4g} {x:14.10f} {row['shifted']:15.3e} {row['nu1']:10.5f} {row['nu2']:10.5f} {r.gamma_star:10.6f}")
    print(f"(theta/pi)^2 = {limit:.6f}; smallest Gamma* found = {min(r['gamma'] for r in rows):.6f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
