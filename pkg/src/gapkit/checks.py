"""Seeded invariant suite behind ``gapkit verify``, plus random potential generators."""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from . import asymptotics as asy
from . import optimize as opt
from .potential import PI, Potential, StepPotential
from .solver import count_crossings, crossing_points, feynman_hellmann, shoot_eigenvalues

SUP_NORM_C = math.exp(1.0 / (8.0 * PI))


def random_single_well(rng: np.random.Generator, M: float = 100.0, max_segments: int = 16,
                       linear: bool | None = None) -> Potential:
    """Random single-well ``V1`` with ``0 <= V1 <= M`` and at most ``max_segments`` pieces.

    Piecewise constant or (with ``linear``) continuous piecewise linear;
    the shape is a non-increasing run followed by a non-decreasing run.
    """
    if linear is None:
        linear = bool(rng.integers(2))
    n = int(rng.integers(2, max_segments + 1))
    inner = np.sort(rng.uniform(0.05, PI - 0.05, n - 1))
    while inner.size > 1 and np.min(np.diff(inner)) < 1e-3:
        inner = np.sort(rng.uniform(0.05, PI - 0.05, n - 1))
    bp = np.concatenate([[0.0], inner, [PI]])
    m = bp.size if linear else n
    j = int(rng.integers(0, m))
    left = np.sort(rng.uniform(0.0, M, j))[::-1]
    right = np.sort(rng.uniform(0.0, M, m - j - 1))
    low = rng.uniform(0.0, min([M, *left[-1:], *right[:1]]))
    vals = np.concatenate([left, [low], right])
    if linear:
        return Potential.piecewise_linear(bp, vals, kind="single_well")
    return Potential.piecewise_constant(bp, vals, kind="single_well")


def _row(claim: str, check: str, ok: bool, detail: str) -> dict[str, Any]:
    return {"claim": claim, "check": check, "status": "PASS" if ok else "FAIL", "detail": detail}


def run_checks(seed: int = 0, quick: bool = False) -> list[dict[str, Any]]:
    """Evaluate every invariant; rows are ``{claim, check, status, detail}``."""
    rng = np.random.default_rng(seed)
    rows: list[dict[str, Any]] = []

    s = shoot_eigenvalues(None, Potential.constant(0.0), k=2)
    err = max(abs(s[0].eigenvalue - 1.0), abs(s[1].eigenvalue - 4.0))
    rows.append(_row("free-gap", "V=0 gives lam1=1, lam2=4", err < 1e-8, f"max error {err:.2e}"))

    n = 20 if quick else 100
    worst = 0
    for _ in range(n):
        V = random_single_well(rng, 100.0, 16)
        a, b = shoot_eigenvalues(None, V, k=2, panels=1024)
        worst = max(worst, count_crossings(a, b))
        crossing_points(a, b)
    rows.append(_row("crossing-lemma", f"u2^2-u1^2 sign changes on {n} random single wells",
                     worst <= 2, f"max {worst}"))

    nf = 5 if quick else 20
    worst_fh = 0.0
    for _ in range(nf):
        V = random_single_well(rng, 50.0, 8, linear=False)
        dV = random_single_well(rng, 1.0, 6, linear=False)
        k = int(rng.integers(1, 3))
        base = shoot_eigenvalues(None, V, k=k, panels=1024)[k - 1]
        h = 1e-4
        lp = shoot_eigenvalues(None, _shift(V, dV, h), k=k, panels=1024)[k - 1].eigenvalue
        lm = shoot_eigenvalues(None, _shift(V, dV, -h), k=k, panels=1024)[k - 1].eigenvalue
        fd = (lp - lm) / (2 * h)
        worst_fh = max(worst_fh, abs(feynman_hellmann(base, dV) - fd) / max(1.0, abs(base.eigenvalue)))
    rows.append(_row("feynman-hellmann", f"FH vs centred difference on {nf} pairs", worst_fh < 1e-4,
                     f"max rel. error {worst_fh:.2e}"))

    worst_sup = 0.0
    for _ in range(10 if quick else 30):
        V = random_single_well(rng, 200.0, 10)
        for sol in shoot_eigenvalues(None, V, k=3, panels=1024):
            worst_sup = max(worst_sup, sol.sup_norm / (SUP_NORM_C * sol.eigenvalue**0.25))
    rows.append(_row("sup-norm", "sup|u_k| <= e^(1/(8 pi)) lam_k^(1/4) * 1.01", worst_sup <= 1.01,
                     f"max ratio {worst_sup:.4f}"))

    Ms = [1e2, 1e3, 1e4] if quick else [1e2, 1e3, 1e4, 1e5, 1e6]
    reps = [opt.minimize_step_family(M) for M in Ms]
    th = asy.solve_theta()
    gam = [r.gamma_star for r in reps]
    dec = all(b < a for a, b in zip(gam, gam[1:]))
    shrink = all(abs(c - b) < abs(b - a) for a, b, c in zip(gam, gam[1:], gam[2:]))
    rows.append(_row("gap-monotone", "step-family optimum decreasing in M, shrinking steps", dec and shrink,
                     ", ".join(f"{g:.6f}" for g in gam)))
    above = all(g > th.limit_gap for g in gam)
    rows.append(_row("gap-lower-bound", "step-family optimum above (theta/pi)^2", above,
                     f"min {min(gam):.6f} vs {th.limit_gap:.6f}"))
    for key, label in (("lambda2_window", "M+1 < lam2 < M+4"), ("lambda1_window", "M-2 < lam1 < M+1"),
                       ("lambda1_below_M", "lam1 < M"), ("lower_bound", "x_minus >= pi/(2 sqrt M)"),
                       ("upper_bound", "x_minus <= pi/sqrt(M-2)")):
        bad = [f"{r.M:g}" for r in reps if not r.checks[key]]
        rows.append(_row("step-optimum", label, not bad, "all M" if not bad else "fails at M=" + ",".join(bad)))
    stat = max(abs(r.stationarity) for r in reps)  # type: ignore[arg-type]
    rows.append(_row("step-optimum", "u2(x_minus)^2 = u1(x_minus)^2 at the optimum", stat < 1e-8,
                     f"max {stat:.1e}"))

    fo = opt.verify_first_order(reps[0].potential, "single_well", M=100.0)
    worst_fo = min(v for _, v in fo)
    rows.append(_row("step-optimum", "no descent along plateau/fill perturbations (M=100)",
                     worst_fo >= -1e-6, f"min derivative {worst_fo:.2e}"))
    bad = opt.verify_first_order(StepPotential(100.0, PI / 2).potential, "single_well", M=100.0)
    worst_bad = min(v for _, v in bad)
    rows.append(_row("step-optimum", "descent exists for a non-optimal step (x_minus=pi/2)",
                     worst_bad < -1e-6, f"min derivative {worst_bad:.2e}"))

    rows.append(_row("limit-constant", "(theta/pi)^2 = 2.04575 to 5 decimals",
                     round(th.limit_gap, 5) == 2.04575 and abs(th.residual) < 1e-12,
                     f"theta={th.theta:.12f} limit={th.limit_gap:.8f}"))
    y1, g = asy.minimize_gap_proxy()
    rows.append(_row("reduced-system", "proxy minimum at y1 = 1/pi",
                     abs(y1 - 1 / PI) < 1e-8 and abs(g - th.limit_gap) < 1e-10, f"y1*={y1:.10f}"))
    e = asy.solve_reduced(asy.Y1_MAX)
    rows.append(_row("reduced-system", "proxy at y1 = 3/(2 tanh(3 pi/2)) is 4.8171",
                     abs(e.gap_proxy - 4.8171) < 5e-4, f"value {e.gap_proxy:.6f}"))
    ya, ga = asy.minimize_reduced_all_branches()
    rows.append(_row("reduced-system", "all-branch reduced minimum agrees with large-M optimum",
                     abs(ga - 2.0) < 1e-9 and gam[-1] - ga < 5e-2, f"y1*={ya:.2e} gap={ga:.8f}"))

    nodes = 8 if quick else 16
    c0 = opt.minimize_convex_pl(10.0, nodes)
    rows.append(_row("convex-class", "V0=0: minimiser constant, gap 3",
                     abs(c0.params["slope"]) < 1e-3 and abs(c0.gamma_star - 3) < 1e-3,
                     f"slope {c0.params['slope']:.2e}, gap {c0.gamma_star:.6f}"))
    c1 = opt.minimize_convex_pl(10.0, nodes, V0=Potential.piecewise_linear([0, PI], [0, PI]))
    rows.append(_row("convex-class", "V0=x: minimiser affine with slope -1",
                     abs(c1.params["slope"] + 1) < 1e-3 and c1.checks["affine"],
                     f"slope {c1.params['slope']:.6f}"))

    tr = opt.truncation_experiment("inverse", (1e3, 1e4, 1e5))
    ok = tr.monotone and all(tr.within_epsilon[m] for m in (1e4, 1e5))
    rows.append(_row("truncation", "V=1/x: capped eigenvalues nondecreasing, shifts < 1e-2", ok,
                     "; ".join(f"M={r.M_cap:g}: {r.shift1:.1e},{r.shift2:.1e}" for r in tr.rows)))
    return rows


def _shift(V: Potential, dV: Potential, h: float) -> Potential:
    from .potential import combine

    return combine(V, dV, 1.0, h)
