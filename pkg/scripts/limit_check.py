"""Large-M limit of the step-family gap: reduced model versus the exact optimum.

Prints the reduced proxy on its nominal range, the all-branch reduced model
(which also admits a trigonometric ground state), and the exact step-family
optimum rescaled to the same variables, then solves the M = 1e4 optimum
again with an adaptive ODE integrator as an independent check.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from gapkit import asymptotics as asy
from gapkit import minimize_step_family


def ivp_eigenvalue(M: float, x: float, lo: float, hi: float) -> float:
    """Dirichlet eigenvalue of the step in ``[lo, hi]`` by RK shooting."""

    def end_value(lam: float) -> float:
        rhs = lambda t, y, c: [y[1], (c - lam) * y[0]]
        a = solve_ivp(rhs, (0.0, x), [0.0, 1.0], args=(0.0,), rtol=1e-13, atol=1e-15, method="DOP853")
        b = solve_ivp(rhs, (x, math.pi), a.y[:, -1], args=(M,), rtol=1e-13, atol=1e-15, method="DOP853")
        scale = math.hypot(*b.y[:, 0])
        return b.y[0, -1] / scale

    return brentq(end_value, lo, hi, xtol=1e-12)


def main() -> None:
    th = asy.solve_theta()
    print(f"theta = {th.theta:.15f}, (theta/pi)^2 = {th.limit_gap:.10f}")
    y1, g = asy.minimize_gap_proxy()
    print(f"reduced proxy: minimum {g:.10f} at y1 = {y1:.10f} (1/pi = {1 / math.pi:.10f})")
    print(f"reduced proxy at y1 = {asy.Y1_MAX:.10f}: {asy.gap_proxy(asy.Y1_MAX):.6f}")
    ya, ga = asy.minimize_reduced_all_branches()
    print(f"all-branch reduced model: minimum {ga:.10f} at y1 = {ya:.2e}")
    print()
    print(f"{'y1':>8} {'proxy':>10} {'all-branch':>11}")
    for y in np.linspace(-0.5, asy.Y1_MAX, 9):
        p = asy.gap_proxy(y) if y >= asy.Y1_MIN else float("nan")
        print(f"{y:8.4f} {p:10.6f} {asy.reduced_gap_all_branches(y):11.6f}")
    print()
    print(f"{'M':>8} {'Gamma*':>12} {'y1 = sqrt(M)(sqrt(M)x*-pi/2)':>30} {'r1':>8} {'r2':>8}")
    for M in (1e2, 1e3, 1e4, 1e5, 1e6):
        r = minimize_step_family(M)
        y = math.sqrt(M) * (math.sqrt(M) * r.params["x_minus"] - math.pi / 2)
        r1 = math.copysign(math.sqrt(abs(r.params["nu1"])), r.params["nu1"])
        print(f"{M:8.0e} {r.gamma_star:12.8f} {y:30.3e} {r1:8.4f} {math.sqrt(r.params['nu2']):8.4f}")
    print()
    M = 1e4
    x = math.pi / (2 * math.sqrt(M))
    l1 = ivp_eigenvalue(M, x, M, M + 1)
    l2 = ivp_eigenvalue(M, x, M + 1, M + 4)
    print(f"RK check at M = 1e4, x = pi/(2 sqrt M): gap = {l2 - l1:.10f} (below (theta/pi)^2: {l2 - l1 < th.limit_gap})")


if __name__ == "__main__":
    main()
