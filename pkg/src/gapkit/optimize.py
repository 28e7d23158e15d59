"""Gap minimisation over step, single-well and convex potential classes.

The step family is one-dimensional and solved in closed form: since
``d lam_n / d x_minus = -M u_n(x_minus)^2``, local minima of the gap are
the ``+ -> -`` sign changes of ``u2(x_minus)^2 - u1(x_minus)^2``.  The grid
searches over the single-well and convex classes are high-dimensional and
serve as independent confirmation; both use the Feynman-Hellmann gradient.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import LinearConstraint, brentq, minimize, minimize_scalar

from . import step as stp
from .potential import (
    ADDITIVE_KINDS,
    PI,
    Potential,
    StepPotential,
    admissible_kappa,
    as_potential,
    classify,
    proof_perturbation,
)
from .solver import (
    cell_gradient,
    crossing_points,
    gap,
    gap_derivative,
    hat_gradient,
    shoot_eigenvalues,
)

CLASSES = ("step-family", "single-well-grid", "convex-pl")
# perturbations admissible only for kappa below this are round-off artefacts
_KAPPA_MIN = 1e-6


@dataclass
class MinimizerReport:
    """Outcome of a gap minimisation.

    Attributes:
        cls: One of ``step-family``, ``single-well-grid``, ``convex-pl``.
        M: Upper bound on the variable part of the potential.
        params: Optimal parameters (step location, or node/cell heights).
        gamma_star: Smallest gap found.
        lambda1: Ground-state eigenvalue at the optimum.
        lambda2: Second eigenvalue at the optimum.
        stationarity: ``u2(x_minus)^2 - u1(x_minus)^2`` for steps.
        first_order: Gap derivatives along the proof perturbations.
        checks: Named boolean checks (bounds, affineness, ...).
        flags: Warnings such as boundary minimisers or non-convergence.
        local_minima: All distinct local minimisers found, as ``(param, gamma)``.
        potential: The optimal potential.
    """

    cls: str
    M: float
    params: dict[str, Any]
    gamma_star: float
    lambda1: float
    lambda2: float
    stationarity: float | None = None
    first_order: list[tuple[str, float]] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    local_minima: list[tuple[float, float]] = field(default_factory=list)
    potential: Potential | None = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "class": self.cls,
            "M": self.M,
            "params": _jsonable(self.params),
            "gamma_star": self.gamma_star,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "stationarity": self.stationarity,
            "first_order": [[k, v] for k, v in self.first_order],
            "checks": self.checks,
            "flags": self.flags,
            "local_minima": [list(t) for t in self.local_minima],
        }
        if self.potential is not None:
            out["potential"] = self.potential.to_dict()
        return out


def _jsonable(d: dict[str, Any]) -> dict[str, Any]:
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}


# ------------------------------------------------------------------ steps
def _scan_points(M: float) -> np.ndarray:
    xs = [np.linspace(PI / 400, PI - PI / 400, 160)]
    if M > 1.0:
        # resolve the boundary layer where the optimum sits for large M
        xs.append(np.linspace(0.3, 6.0, 160) / math.sqrt(M))
    x = np.unique(np.concatenate(xs))
    return x[(x > 0.0) & (x < PI)]


@functools.lru_cache(maxsize=256)
def _step_family(M: float, tol: float) -> MinimizerReport:
    xs = _scan_points(M)
    g = np.array([stp.stationarity(M, x) for x in xs])
    gam = np.array([stp.step_gap(M, x) for x in xs])
    cands: list[tuple[float, float]] = []
    for i in np.flatnonzero((g[:-1] > 0.0) & (g[1:] <= 0.0)):
        x = brentq(lambda t: stp.stationarity(M, t), xs[i], xs[i + 1], xtol=tol, rtol=1e-15)
        cands.append((float(x), stp.step_gap(M, x)))
    flags = []
    if not cands:
        i = int(np.argmin(gam))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
        res = minimize_scalar(lambda t: stp.step_gap(M, t), bounds=(lo, hi), method="bounded",
                              options={"xatol": tol})
        cands.append((float(res.x), float(res.fun)))
        flags.append("no interior stationary point; minimiser at the scan boundary")
    cands.sort(key=lambda c: c[1])
    x_star, g_star = cands[0]
    e = stp.step_eigenvalues(M, x_star, 2)
    l1, l2 = e[0].lam, e[1].lam
    checks: dict[str, bool] = {"lower_bound": x_star >= PI / (2 * math.sqrt(M))}
    if M > 2.0:
        checks["upper_bound"] = x_star <= PI / math.sqrt(M - 2.0)
        checks["lambda2_window"] = M + 1.0 < l2 < M + 4.0
        checks["lambda1_window"] = M - 2.0 < l1 < M + 1.0
        checks["lambda1_below_M"] = e[0].nu < 0.0
    params = {
        "x_minus": x_star,
        "side": "LEFT",
        "twin": {"x_minus": PI - x_star, "side": "RIGHT"},
        "branch1": e[0].branch.value,
        "branch2": e[1].branch.value,
        "nu1": e[0].nu,
        "nu2": e[1].nu,
    }
    return MinimizerReport("step-family", M, params, e[1].nu - e[0].nu, l1, l2,
                           stationarity=stp.stationarity(M, x_star), checks=checks, flags=flags,
                           local_minima=cands, potential=StepPotential(M, x_star).potential)


def minimize_step_family(M: float, tol: float = 1e-13) -> MinimizerReport:
    """Best step ``M * chi_[x_minus, pi]`` (LEFT canonical; the reflection is the twin).

    Scans ``x_minus`` (densely near ``pi / (2 sqrt(M))`` for large ``M``)
    and refines every ``+ -> -`` sign change of ``u2^2 - u1^2`` at the
    step with Brent's method.  The gap is reported as ``nu2 - nu1`` to
    keep full precision at large ``M``.
    """
    if not M > 0.0:
        raise ValueError("M must be positive")
    return _step_family(float(M), float(tol))


def optimum_branch_survey(Ms: Sequence[float]) -> list[dict[str, float]]:
    """Sign of ``lam1 - M`` at the family optimum for each ``M``.

    Shows on which side of the degenerate branch ``lam1 = M`` the optimal
    ground state falls.
    """
    rows = []
    for M in Ms:
        r = minimize_step_family(M)
        rows.append({"M": float(M), "x_minus": r.params["x_minus"], "nu1": r.params["nu1"],
                     "y1": (math.sqrt(M) * r.params["x_minus"] - PI / 2) * math.sqrt(M)})
    return rows


# ------------------------------------------------------------------ helpers
class _GapObjective:
    """Gap and FH gradient of a parametrised potential, with one-entry caching."""

    def __init__(self, build: Callable[[np.ndarray], Potential],
                 grad: Callable[[Any, Any], np.ndarray], panels: int):
        self.build, self.grad, self.panels = build, grad, panels
        self._key: bytes | None = None
        self._val: tuple[float, np.ndarray] | None = None
        self.calls = 0

    def _eval(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        key = np.asarray(v, dtype=float).tobytes()
        if key != self._key:
            V = self.build(v)
            s = shoot_eigenvalues(None, V, k=2, panels=self.panels)
            self._key = key
            self._val = (s[1].eigenvalue - s[0].eigenvalue, V.sign * self.grad(s[0], s[1]))
            self.calls += 1
        return self._val

    def value(self, v: np.ndarray) -> float:
        return self._eval(v)[0]

    def gradient(self, v: np.ndarray) -> np.ndarray:
        return self._eval(v)[1]


def _is_symmetric(V0: Potential | None) -> bool:
    if V0 is None:
        return True
    x = np.linspace(0.0, PI, 257)
    return bool(np.allclose(V0(x), V0(PI - x), atol=1e-12))


def l1_distance_to_step(V1: Potential, M: float, samples: int = 20001) -> tuple[float, float, str]:
    """L1 distance from ``V1`` to the nearest end-supported step of height ``M``.

    Returns ``(distance, x_minus, side)`` where ``side`` is ``LEFT`` for
    ``M * chi_[x_minus, pi]`` and ``RIGHT`` for ``M * chi_[0, x_minus]``.
    """
    x = np.unique(np.concatenate([np.linspace(0.0, PI, samples), V1.breakpoints]))
    v = V1.variable(0.5 * (x[:-1] + x[1:]))
    h = np.diff(x)
    zero = np.concatenate([[0.0], np.cumsum(np.abs(v) * h)])
    full = np.concatenate([[0.0], np.cumsum(np.abs(M - v) * h)])
    left = zero + (full[-1] - full)   # 0 before x, M after
    right = full + (zero[-1] - zero)  # M before x, 0 after
    i, j = int(np.argmin(left)), int(np.argmin(right))
    if left[i] <= right[j]:
        return float(left[i]), float(x[i]), "LEFT"
    return float(right[j]), float(x[j]), "RIGHT"


# ------------------------------------------------------------------ single well
def _unimodal_matrix(n: int, j: int) -> np.ndarray:
    """``h = A z``: ``z[0]`` is the height at cell ``j``, the rest non-negative increments outward."""
    A = np.zeros((n, n))
    A[:, 0] = 1.0
    col = 1
    for i in range(j - 1, -1, -1):      # left increments, cumulative toward 0
        A[: i + 1, col] = 1.0
        col += 1
    for i in range(j + 1, n):           # right increments, cumulative toward pi
        A[i:, col] = 1.0
        col += 1
    return A


def minimize_single_well_grid(M: float, n_breakpoints: int = 32, V0: Potential | None = None,
                              sign: int = 1, tol: float = 1e-9, max_iter: int = 200,
                              panels: int = 512, starts: Sequence[int] | None = None) -> MinimizerReport:
    """Minimise the gap over piecewise-constant single-well ``V1`` on a uniform grid.

    ``n_breakpoints`` uniform cells carry the heights.  For every transition
    cell ``j`` (the first half only when the problem is reflection
    symmetric) the heights are written as a base value plus non-negative
    increments, which turns the single-well shape and ``0 <= V1 <= M`` into
    linear constraints; SLSQP then descends along the FH gradient.
    """
    if n_breakpoints < 4:
        raise ValueError("need at least 4 cells")
    if M < 0:
        raise ValueError("M must be non-negative")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n = n_breakpoints
    bp = np.linspace(0.0, PI, n + 1)

    def build(h: np.ndarray) -> Potential:
        return Potential.piecewise_constant(bp, np.clip(h, 0.0, M), background=V0, sign=sign)

    if M == 0.0:
        V = build(np.zeros(n))
        g = gap(V)
        return MinimizerReport("single-well-grid", M, {"breakpoints": bp, "heights": np.zeros(n)},
                               g.gamma, g.lambda1, g.lambda2, potential=V)

    obj = _GapObjective(build, lambda a, b: cell_gradient(a, b, bp), panels)
    if starts is None:
        starts = range((n + 1) // 2) if _is_symmetric(V0) else range(n)
    best: tuple[float, np.ndarray] | None = None
    local: list[tuple[float, float]] = []
    flags: list[str] = []
    for j in starts:
        A = _unimodal_matrix(n, j)
        # start from a shallow V centred on cell j
        h0 = np.clip(np.abs(np.arange(n) - j) / (n / 3.0), 0.0, 1.0) * 0.9 * M
        z0 = np.linalg.lstsq(A, h0, rcond=None)[0]
        z0 = np.maximum(z0, 0.0)
        ends = LinearConstraint(A[[0, -1]], -np.inf, M)
        res = minimize(lambda z: obj.value(A @ z), z0, jac=lambda z: A.T @ obj.gradient(A @ z),
                       method="SLSQP", bounds=[(0.0, M)] * n, constraints=[ends],
                       options={"ftol": tol * 1e-3, "maxiter": max_iter})
        h = np.clip(A @ res.x, 0.0, M)
        val = obj.value(h)
        local.append((float(j), float(val)))
        if not res.success:
            flags.append(f"start {j}: {res.message}")
        if best is None or val < best[0]:
            best = (val, h)
    assert best is not None
    gamma_star, h = best
    V = build(h)
    g = gap(V)
    dist, xs, side = l1_distance_to_step(V.variable_part(), M)
    params = {"breakpoints": bp, "heights": h, "nearest_step": {"x_minus": xs, "side": side},
              "l1_to_step": dist, "evaluations": obj.calls}
    checks = {"single_well": classify(V, tol=1e-9 * max(1.0, M)).single_well,
              "bounded": V.bounded_by(M, tol=1e-9)}
    fo = verify_first_order(V, "single_well", M=M)
    return MinimizerReport("single-well-grid", M, params, g.gamma, g.lambda1, g.lambda2,
                           first_order=fo, checks=checks, flags=flags, local_minima=local, potential=V)


# ------------------------------------------------------------------ convex
def minimize_convex_pl(M: float, n_breakpoints: int = 16, V0: Potential | None = None,
                       tol: float = 1e-3, max_iter: int = 300, panels: int = 512,
                       x0: np.ndarray | None = None) -> MinimizerReport:
    """Minimise the gap over convex piecewise-linear ``V1`` with ``0 <= V1 <= M``.

    The unknowns are the node values on a uniform grid of ``n_breakpoints``
    nodes; convexity is the linear constraint that second differences are
    non-negative.  ``tol`` bounds the slope jumps for the affineness check.
    """
    if n_breakpoints < 3:
        raise ValueError("need at least 3 nodes")
    if M <= 0:
        raise ValueError("M must be positive")
    n = n_breakpoints
    nodes = np.linspace(0.0, PI, n)

    def build(v: np.ndarray) -> Potential:
        return Potential.piecewise_linear(nodes, np.clip(v, 0.0, M), background=V0)

    obj = _GapObjective(build, lambda a, b: hat_gradient(a, b, nodes), panels)
    D = np.zeros((n - 2, n))
    for i in range(n - 2):
        D[i, i:i + 3] = (1.0, -2.0, 1.0)
    if x0 is None:
        # a strictly convex start away from the expected answer
        t = nodes / PI
        x0 = M * (0.2 + 0.6 * (t - 0.7) ** 2)
    res = minimize(obj.value, x0, jac=obj.gradient, method="SLSQP", bounds=[(0.0, M)] * n,
                   constraints=[LinearConstraint(D, 0.0, np.inf)],
                   options={"ftol": 1e-13, "maxiter": max_iter})
    v = np.clip(res.x, 0.0, M)
    V = build(v)
    g = gap(V)
    slopes = np.diff(v) / np.diff(nodes)
    jumps = np.diff(slopes)
    m, b = np.polyfit(nodes, v, 1)
    checks = {"convex": bool(np.all(jumps >= -1e-9)), "affine": bool(np.max(np.abs(jumps)) < tol)}
    if V0 is None:
        checks["constant"] = abs(m) < tol
    flags = [] if res.success else [str(res.message)]
    params = {"nodes": nodes, "values": v, "slope": float(m), "intercept": float(b),
              "max_slope_jump": float(np.max(np.abs(jumps))) if jumps.size else 0.0,
              "evaluations": obj.calls}
    fo = verify_first_order(V, "convex", M=M)
    return MinimizerReport("convex-pl", M, params, g.gamma, g.lambda1, g.lambda2,
                           first_order=fo, checks=checks, flags=flags, potential=V)


def scan_affine(M: float, V0: Potential | None = None, n: int = 21) -> tuple[float, float, float]:
    """Brute-force best affine ``V1 = m x + b`` with ``0 <= V1 <= M``; returns ``(m, b, gamma)``."""
    best = (0.0, 0.0, math.inf)
    for m in np.linspace(-M / PI, M / PI, n):
        lo, hi = max(0.0, -m * PI), min(M, M - m * PI)
        for b in np.linspace(lo, hi, max(2, n // 2)):
            V = Potential.piecewise_linear([0.0, PI], [b, b + m * PI], background=V0)
            s = shoot_eigenvalues(None, V, k=2, panels=256)
            val = s[1].eigenvalue - s[0].eigenvalue
            if val < best[2]:
                best = (float(m), float(b), val)
    return best


# ------------------------------------------------------------------ first order
def verify_first_order(V: Any, cls: str, M: float | None = None,
                       tol: float = 1e-9) -> list[tuple[str, float]]:
    """Gap derivatives along every admissible proof perturbation.

    Single-well class: ``plateau`` on ``[x_minus, x_plus]`` and the two
    fills anchored at the crossing points, each as a blend toward ``P``.
    Convex class: ``left-corner`` / ``right-corner`` at every node outside
    ``(x_minus, x_plus)`` and ``hinge`` at every node inside, each taken
    with the sign that keeps ``V1 + t P`` convex for small ``t > 0``
    (both signs where both are admissible).  A local minimiser has every
    reported value ``>= -tol``.
    """
    Vp = as_potential(V)
    sols = shoot_eigenvalues(None, Vp, k=3)
    xm, x0, xp = crossing_points(sols[0], sols[1])
    out: list[tuple[str, float]] = []
    if cls in ("single_well", "step", "single-well", "step-family"):
        perts = [("plateau", dict(x_minus=xm, x_plus=xp))]
        if xm > 0.0:
            perts.append(("left-fill", dict(anchor=xm)))
        if xp < PI:
            perts.append(("right-fill", dict(anchor=xp)))
        for kind, kw in perts:
            P = proof_perturbation(Vp, kind, **kw)
            if admissible_kappa(Vp, P, kind, M=M, target="single_well") <= _KAPPA_MIN:
                continue
            out.append((kind, gap_derivative(Vp, P, kind=kind, sols=sols)))
        return out
    if cls not in ("convex", "convex-pl"):
        raise ValueError(f"unknown class {cls!r}")
    nodes = Vp.breakpoints[1:-1]
    for c in nodes:
        if xm < c < xp:
            kind, P = "hinge", proof_perturbation(Vp, "hinge", x_minus=xm, x_plus=xp, x_n=c)
        else:
            kind = "left-corner" if c <= xm else "right-corner"
            P = proof_perturbation(Vp, kind, x_n=c)
        d = gap_derivative(Vp, P, kind=kind, sols=sols)
        for sgn in (1.0, -1.0):
            Ps = P.with_variable(P.breakpoints, sgn * P.left, sgn * P.right)
            if admissible_kappa(Vp, Ps, kind, M=M, target="convex") > _KAPPA_MIN:
                out.append((f"{kind}{'+' if sgn > 0 else '-'}@{c:.6g}", sgn * d))
    return out


# ------------------------------------------------------------------ truncation
@dataclass(frozen=True)
class Divergent:
    """Closed-form potential diverging at ``x = 0``.

    ``f`` is the potential and ``df`` its derivative (used for the convex
    tangent-line truncation).
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: Any) -> Any:
        return self.f(np.asarray(x, dtype=float))


DIVERGENT = {
    "inverse": Divergent("1/x", lambda x: 1.0 / x, lambda x: -1.0 / x**2),
    "inverse_sqrt": Divergent("x^-1/2", lambda x: x**-0.5, lambda x: -0.5 * x**-1.5),
    "log": Divergent("-log(x/pi)", lambda x: -np.log(x / PI), lambda x: -1.0 / x),
}


class _Sampled:
    """Callable potential with explicit breakpoints, as the solver expects."""

    def __init__(self, f: Callable[[np.ndarray], np.ndarray], breakpoints: Sequence[float]):
        self._f = f
        self.all_breakpoints = np.unique(np.concatenate([[0.0, PI], np.asarray(breakpoints, float)]))

    def __call__(self, x: Any) -> Any:
        return self._f(np.asarray(x, dtype=float))


def truncate(V: Divergent, M_cap: float, mode: str = "single_well") -> tuple[Callable, float]:
    """Bounded replacement ``V_M`` and the abscissa where it rejoins ``V``.

    ``single_well``: ``min(V, M_cap)``, i.e. the full blend toward ``M_cap``
    on the region where ``V`` exceeds it.  ``convex``: the tangent line at
    the point ``l`` where the tangent reaches ``M_cap`` at ``x = 0``.
    """
    if mode == "single_well":
        if float(V(np.float64(1e-300))) <= M_cap:
            raise ValueError(f"{V.name} stays below M_cap={M_cap:g} in double precision")
        ell = brentq(lambda x: float(V(x)) - M_cap, 1e-300, PI) if float(V(PI)) < M_cap else PI
        return (lambda x: np.minimum(V(np.maximum(x, 1e-300)), M_cap)), ell
    if mode == "convex":
        def tang0(l: float) -> float:
            with np.errstate(over="ignore", divide="ignore"):
                return float(V.f(np.float64(l)) - V.df(np.float64(l)) * l) - M_cap

        if tang0(1e-300) <= 0.0:
            raise ValueError(f"{V.name}: tangent intercepts stay below M_cap={M_cap:g} in double precision")
        ell = brentq(tang0, 1e-300, PI)
        Vl, dl = float(V.f(np.float64(ell))), float(V.df(np.float64(ell)))
        return (lambda x: np.where(x < ell, Vl + dl * (x - ell), V(np.maximum(x, 1e-300)))), ell
    raise ValueError("mode must be 'single_well' or 'convex'")


@dataclass
class TruncationRow:
    M_cap: float
    ell: float
    lambda1: float
    lambda2: float
    shift1: float
    shift2: float


@dataclass
class TruncationResult:
    reference: tuple[float, float]
    reference_extrapolated: tuple[float, float]
    rows: list[TruncationRow]
    monotone: bool
    within_epsilon: dict[float, bool]


def truncation_experiment(V: Divergent | str, M_caps: Sequence[float] = (1e3, 1e4, 1e5),
                          epsilon: float = 1e-2, mode: str = "single_well",
                          panels: int = 8192) -> TruncationResult:
    """Eigenvalue shifts caused by capping a potential that diverges at 0.

    All problems share one mesh (containing every rejoin point), so the
    shifts are differences of the same discretisation and are exactly
    one-sided.  The untruncated reference is also reported with Richardson
    extrapolation.
    """
    if isinstance(V, str):
        V = DIVERGENT[V]
    xs = np.array([1e-8, 1e-6, 1e-4])
    if not np.all(np.isfinite(V(xs))) or not np.all(np.abs(xs**2 * V(xs)) < np.abs(xs[-1] ** 2 * V(xs[-1])) + 1e-12):
        raise ValueError(f"{V.name}: x^2 V(x) must tend to 0 for a regular Dirichlet endpoint")
    caps = sorted(float(m) for m in M_caps)
    truncs = [truncate(V, m, mode) for m in caps]
    bps = [ell for _, ell in truncs]
    ref = shoot_eigenvalues(None, _Sampled(V, bps), k=2, panels=panels, extrapolate=False)
    ref_x = shoot_eigenvalues(None, _Sampled(V, bps), k=2, panels=panels, extrapolate=True)
    rows = []
    for m, (f, ell) in zip(caps, truncs):
        s = shoot_eigenvalues(None, _Sampled(f, bps), k=2, panels=panels, extrapolate=False)
        rows.append(TruncationRow(m, ell, s[0].eigenvalue, s[1].eigenvalue,
                                  s[0].eigenvalue - ref[0].eigenvalue, s[1].eigenvalue - ref[1].eigenvalue))
    mono = all(b.lambda1 >= a.lambda1 and b.lambda2 >= a.lambda2 for a, b in zip(rows, rows[1:]))
    noise = 1e-12 * max(ref[1].eigenvalue, 1.0)
    within = {r.M_cap: (-epsilon <= r.shift1 <= noise and -epsilon <= r.shift2 <= noise) for r in rows}
    return TruncationResult((ref[0].eigenvalue, ref[1].eigenvalue),
                            (ref_x[0].eigenvalue, ref_x[1].eigenvalue), rows, mono, within)
