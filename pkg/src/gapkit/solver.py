"""Eigenpairs of ``-(p u')' + V u = lam u`` on [0, pi] and gap diagnostics.

Two independent routes are provided:

* :func:`shoot_eigenvalues` -- Prufer shooting on a mesh aligned with every
  breakpoint of ``V``.  Coefficients are frozen per cell and each cell is
  crossed exactly, so piecewise-constant potentials with ``p = 1`` are
  solved without discretisation error.  Smooth data gets a Richardson
  correction from a nested half-step mesh.
* :func:`dense_oracle` -- the symmetric three-point flux discretisation,
  diagonalised as a tridiagonal matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from . import _prufer
from .potential import (
    ADDITIVE_KINDS,
    DIRICHLET,
    PI,
    UNIT_P,
    BoundaryConditions,
    CoefficientP,
    Potential,
    StepPotential,
    as_potential,
    combine,
)

DEFAULT_PANELS = 4096
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


class ConvergenceError(RuntimeError):
    """Eigenvalue bracketing or refinement failed."""


class LemmaViolation(RuntimeError):
    """``u2^2 - u1^2`` changed sign more than twice."""


@dataclass
class EigenSolution:
    """One eigenpair sampled on the solver mesh.

    ``u`` is L2-normalised, ``du`` is ``u'`` at the same nodes.  The sign
    is fixed so that ``u > 0`` just to the right of 0.
    """

    n: int
    eigenvalue: float
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    sign_changes: int
    sup_norm: float
    residual: float = 0.0
    method: str = "shooting"
    _spline: CubicHermiteSpline | None = field(default=None, repr=False)

    @property
    def lambda_(self) -> float:
        return self.eigenvalue

    def at(self, x: Any) -> Any:
        """Cubic Hermite interpolant of ``u``."""
        if self._spline is None:
            self._spline = CubicHermiteSpline(self.x, self.u, self.du)
        return self._spline(x)

    def norm2(self) -> float:
        return float(simpson(self.u**2, x=self.x))


@dataclass
class GapResult:
    lambda1: float
    lambda2: float
    gamma: float
    x_minus: float
    x_zero: float
    x_plus: float
    solutions: list[EigenSolution] = field(default_factory=list, repr=False)


@dataclass
class Wronskian:
    x: np.ndarray
    W: np.ndarray
    residual: float
    relative_residual: float
    endpoints: tuple[float, float]
    ratio_decrease_margin: float


# ---------------------------------------------------------------- meshes
def _breakpoints_of(V: Any) -> np.ndarray:
    bp = getattr(V, "all_breakpoints", None)
    if bp is None:
        bp = getattr(V, "breakpoints", None)
    return np.array([0.0, PI]) if bp is None else np.asarray(bp, dtype=float)


def build_mesh(breakpoints: Sequence[float], panels: int) -> np.ndarray:
    """Uniform grid of ``panels`` cells merged with the given breakpoints."""
    pts = np.concatenate([np.linspace(0.0, PI, panels + 1), np.asarray(breakpoints, float)])
    pts = np.unique(np.clip(pts, 0.0, PI))
    keep = np.concatenate([[True], np.diff(pts) > 1e-13])
    pts = pts[keep]
    pts[0], pts[-1] = 0.0, PI
    return pts


def halve(mesh: np.ndarray) -> np.ndarray:
    """Nested refinement: every cell split at its midpoint."""
    out = np.empty(2 * mesh.size - 1)
    out[0::2] = mesh
    out[1::2] = 0.5 * (mesh[:-1] + mesh[1:])
    return out


def _as_callable(V: Any) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(V, (int, float)):
        c = float(V)
        return lambda x: np.full_like(np.asarray(x, dtype=float), c)
    return V


def _smooth_only(V: Any, p: CoefficientP) -> bool:
    """True when cell-frozen coefficients are exact (no Richardson needed)."""
    pc = getattr(V, "is_piecewise_constant", False)
    return bool(pc) and p.is_constant


# ---------------------------------------------------------------- shooting
class _Problem:
    """Mesh plus frozen cell coefficients for one discretisation level."""

    def __init__(self, mesh: np.ndarray, V: Any, p: CoefficientP, bc: BoundaryConditions):
        self.mesh = mesh
        self.widths = np.diff(mesh)
        mids = 0.5 * (mesh[:-1] + mesh[1:])
        self.vc = np.ascontiguousarray(np.asarray(_as_callable(V)(mids), dtype=float))
        self.pc = np.ascontiguousarray(np.asarray(p(mids), dtype=float) * np.ones_like(mids))
        if not np.all(np.isfinite(self.vc)):
            raise ValueError("potential is not finite at cell midpoints")
        self.p = p
        self.alpha = bc.alpha
        self.beta_eff = bc.beta if bc.beta > 0.0 else PI
        self.beta = bc.beta

    def phase(self, lam: float) -> float:
        return _prufer.end_phase(self.widths, self.pc, self.vc, lam, self.alpha)

    def eigenvalue(self, n: int, lower: float | None, tol: float) -> tuple[float, float]:
        target = self.beta_eff + (n - 1) * PI

        def f(lam: float) -> float:
            return self.phase(lam) - target

        vmin, vmax = float(self.vc.min()), float(self.vc.max())
        scale = max(1.0, abs(vmin), abs(vmax))
        lo = vmin - 1.0 if lower is None else lower
        step = max(1.0, 0.1 * scale)
        for _ in range(200):
            if f(lo) < 0.0:
                break
            lo -= step
            step *= 2.0
        else:
            raise ConvergenceError("could not bracket eigenvalue from below")
        hi = max(vmax, lo) + (n + 1) ** 2 / min(1.0, float(self.pc.min())) * max(1.0, float(self.pc.max()))
        step = max(1.0, hi - lo)
        for _ in range(200):
            if f(hi) > 0.0:
                break
            lo = hi
            hi += step
            step *= 2.0
        else:
            raise ConvergenceError("could not bracket eigenvalue from above")
        # relative accuracy from rtol; the bracket can be far wider than lam
        lam = brentq(f, lo, hi, xtol=min(tol, 1e-12) * 1e-3, rtol=4 * np.finfo(float).eps,
                     maxiter=500)
        return lam, f(lam)

    def eigenfunction(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """Two-sided sweep, matched where the contamination estimate is smallest."""
        UL, WL, AL, DL = _prufer.sweep(self.widths, self.pc, self.vc, lam,
                                        math.sin(self.alpha), math.cos(self.alpha), True)
        UR, WR, AR, DR = _prufer.sweep(self.widths, self.pc, self.vc, lam,
                                        math.sin(self.beta), math.cos(self.beta), False)
        worst = np.maximum(DL, DR)
        cand = np.flatnonzero(worst <= worst.min() + 1e-9)
        # among equally safe nodes take the one where the solution is largest
        m = int(cand[np.argmax(AL[cand] + AR[cand])])
        sgn = 1.0 if UL[m] * UR[m] + WL[m] * WR[m] >= 0.0 else -1.0
        logs = np.where(np.arange(AL.size) <= m, AL, AL[m] + AR - AR[m])
        uu = np.where(np.arange(AL.size) <= m, UL, sgn * UR)
        ww = np.where(np.arange(AL.size) <= m, WL, sgn * WR)
        amp = np.exp(logs - logs.max())
        return uu * amp, ww * amp


def _finish(n: int, lam: float, x: np.ndarray, u: np.ndarray, du: np.ndarray,
            residual: float, method: str) -> EigenSolution:
    nrm = math.sqrt(float(simpson(u * u, x=x)))
    u, du = u / nrm, du / nrm
    # positive just to the right of 0
    head = u[1:max(3, u.size // 64)]
    ref = head[np.argmax(np.abs(head))] if np.any(head != 0) else u[np.argmax(np.abs(u))]
    if ref < 0:
        u, du = -u, -du
    return EigenSolution(n, float(lam), x, u, du, count_sign_changes(u), float(np.max(np.abs(u))),
                         float(residual), method)


def count_sign_changes(f: np.ndarray, rel: float = 1e-10) -> int:
    """Sign changes of sampled data, ignoring values below ``rel * max|f|``."""
    s = np.sign(np.where(np.abs(f) > rel * np.max(np.abs(f)), f, 0.0))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def shoot_eigenvalues(p: CoefficientP | None, V: Any, bc: BoundaryConditions | None = None,
                      k: int = 2, tol: float = 1e-10, panels: int = DEFAULT_PANELS,
                      extrapolate: bool | None = None) -> list[EigenSolution]:
    """The ``k`` lowest eigenpairs by Prufer shooting.

    Eigenvalue ``n`` is the root of ``phase(pi; lam) = beta' + (n - 1) pi``
    with ``beta'`` in (0, pi].  When the cell-frozen coefficients are not
    exact the result is Richardson-extrapolated from the mesh and its
    nested halving (``extrapolate=None`` decides automatically).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = UNIT_P if p is None else p
    bc = DIRICHLET if bc is None else bc
    mesh = build_mesh(_breakpoints_of(V), panels)
    if extrapolate is None:
        extrapolate = not _smooth_only(V, p)
    coarse = _Problem(mesh, V, p, bc)
    fine = _Problem(halve(mesh), V, p, bc) if extrapolate else None

    out: list[EigenSolution] = []
    lower_c = lower_f = None
    for n in range(1, k + 1):
        lam_c, res = coarse.eigenvalue(n, lower_c, tol)
        lower_c = lam_c
        prob, lam = coarse, lam_c
        if fine is not None:
            lam_f, res = fine.eigenvalue(n, lower_f, tol)
            lower_f = lam_f
            prob, lam = fine, (4.0 * lam_f - lam_c) / 3.0
            lam_used = lam_f
        else:
            lam_used = lam_c
        u, w = prob.eigenfunction(lam_used)
        du = w / np.asarray(p(prob.mesh), dtype=float)
        out.append(_finish(n, lam, prob.mesh, u, du, res, "shooting"))
    return out


# ---------------------------------------------------------------- oracle
def aligned_mesh(breakpoints: Sequence[float], panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform-per-interval mesh with every breakpoint as a node.

    Returns the mesh and the per-interval cell counts, so a nested mesh
    with doubled counts can be rebuilt exactly.
    """
    bp = np.unique(np.clip(np.asarray(breakpoints, float), 0.0, PI))
    bp[0], bp[-1] = 0.0, PI
    counts = np.maximum(1, np.round(panels * np.diff(bp) / PI).astype(int))
    return _mesh_from_counts(bp, counts), counts


def _mesh_from_counts(bp: np.ndarray, counts: np.ndarray) -> np.ndarray:
    pieces = [np.linspace(a, b, c + 1)[:-1] for a, b, c in zip(bp[:-1], bp[1:], counts)]
    return np.concatenate(pieces + [[PI]])


def _dual_integrals(V: Any, x: np.ndarray) -> np.ndarray:
    """Integral of V over each node's dual cell."""
    edges = np.concatenate([[x[0]], 0.5 * (x[:-1] + x[1:]), [x[-1]]])
    integ = getattr(V, "integrate", None)
    if integ is not None:
        return np.asarray(integ(edges[:-1], edges[1:]), dtype=float)
    f = _as_callable(V)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * _GL_X[None, :]
    return (np.asarray(f(pts.ravel())).reshape(pts.shape) * _GL_W[None, :]).sum(axis=1) * half


def _oracle_on_mesh(p: CoefficientP, V: Any, bc: BoundaryConditions, k: int,
                    x: np.ndarray) -> list[EigenSolution]:
    h = np.diff(x)
    pe = np.asarray(p(0.5 * (x[:-1] + x[1:])), dtype=float) * np.ones_like(h)
    stiff = pe / h
    diag = np.zeros(x.size)
    diag[:-1] += stiff
    diag[1:] += stiff
    off = -stiff
    mass = np.zeros(x.size)
    mass[:-1] += 0.5 * h
    mass[1:] += 0.5 * h
    diag += _dual_integrals(V, x)
    if bc.alpha != 0.0:
        diag[0] += math.cos(bc.alpha) / math.sin(bc.alpha)
    if bc.beta != 0.0:
        diag[-1] -= math.cos(bc.beta) / math.sin(bc.beta)
    lo = 1 if bc.alpha == 0.0 else 0
    hi = x.size - 1 if bc.beta == 0.0 else x.size
    d, e, m = diag[lo:hi], off[lo:hi - 1], mass[lo:hi]
    sm = np.sqrt(m)
    evals, evecs = eigh_tridiagonal(d / m, e / (sm[:-1] * sm[1:]), select="i",
                                    select_range=(0, k - 1))
    out = []
    for n in range(k):
        u = np.zeros(x.size)
        u[lo:hi] = evecs[:, n] / sm
        du = np.gradient(u, x)
        sol = _finish(n + 1, evals[n], x, u, du, 0.0, "dense")
        # keep the oracle's own (lumped-mass) normalisation
        scale = math.sqrt(float(np.sum(mass * sol.u**2)))
        sol.u, sol.du = sol.u / scale, sol.du / scale
        sol.sup_norm = float(np.max(np.abs(sol.u)))
        out.append(sol)
    return out


def dense_oracle(p: CoefficientP | None, V: Any, bc: BoundaryConditions | None = None,
                 k: int = 2, grid_size: int = 2048, align: bool = True) -> list[EigenSolution]:
    """Lowest ``k`` eigenpairs of the three-point flux-form discretisation.

    With ``align`` every breakpoint of ``V`` becomes a node (cells are
    uniform within each breakpoint interval); the potential enters through
    exact dual-cell averages.
    """
    if grid_size < 64 or grid_size < 16 * k:
        raise ValueError("grid too coarse for the requested number of eigenpairs")
    p = UNIT_P if p is None else p
    bc = DIRICHLET if bc is None else bc
    if align:
        x, _ = aligned_mesh(_breakpoints_of(V), grid_size)
    else:
        x = np.linspace(0.0, PI, grid_size + 1)
    return _oracle_on_mesh(p, V, bc, k, x)


def dense_oracle_extrapolated(p: CoefficientP | None, V: Any, bc: BoundaryConditions | None = None,
                              k: int = 2, grid_size: int = 2048) -> np.ndarray:
    """Richardson-extrapolated oracle eigenvalues from two nested aligned grids."""
    p = UNIT_P if p is None else p
    bc = DIRICHLET if bc is None else bc
    bp = np.unique(np.clip(_breakpoints_of(V), 0.0, PI))
    _, counts = aligned_mesh(bp, grid_size)
    lam_c = np.array([s.eigenvalue for s in _oracle_on_mesh(p, V, bc, k, _mesh_from_counts(bp, counts))])
    lam_f = np.array([s.eigenvalue for s in _oracle_on_mesh(p, V, bc, k, _mesh_from_counts(bp, 2 * counts))])
    return (4.0 * lam_f - lam_c) / 3.0


# ---------------------------------------------------------------- diagnostics
def _quad_nodes(x: np.ndarray, extra: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    pts = np.unique(np.concatenate([x, np.asarray(extra, float)]))
    a, b = pts[:-1], pts[1:]
    half = 0.5 * (b - a)
    q = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    wts = half[:, None] * _GL_W[None, :]
    return q.ravel(), wts.ravel()


def integrate_weighted(sol: EigenSolution, f: Any, other: EigenSolution | None = None) -> float:
    """``int f u_n u_m dx`` by Gauss-Legendre on the mesh refined by f's breakpoints."""
    extra = [] if isinstance(f, (int, float)) else _breakpoints_of(f)
    xq, wq = _quad_nodes(sol.x, extra)
    ua = sol.at(xq)
    ub = ua if other is None else other.at(xq)
    fv = _as_callable(f)(xq)
    return float(np.sum(wq * fv * ua * ub))


def feynman_hellmann(sol: EigenSolution, dV: Any) -> float:
    """``d lam_n / d kappa = int dV u_n^2`` for the family ``V + kappa dV``."""
    return integrate_weighted(sol, dV)


def crossing_points(sol1: EigenSolution, sol2: EigenSolution) -> tuple[float, float, float]:
    """``(x_minus, x_zero, x_plus)``: sign changes of ``u2^2 - u1^2`` around the node of u2.

    ``x_minus = 0`` or ``x_plus = pi`` when there is no crossing on that side.
    """
    x = sol1.x if sol1.x.size >= sol2.x.size else sol2.x
    u1, u2 = sol1.at(x), sol2.at(x)

    def d(t: float) -> float:
        return float(sol2.at(t) ** 2 - sol1.at(t) ** 2)

    zeros = _sign_change_brackets(u2[1:-1], x[1:-1])
    if len(zeros) != 1:
        raise LemmaViolation(f"u2 has {len(zeros)} interior zeros, expected 1")
    a, b = zeros[0]
    x0 = brentq(lambda t: float(sol2.at(t)), a, b, xtol=1e-14)
    brackets = _sign_change_brackets((u2**2 - u1**2)[1:-1], x[1:-1])
    if len(brackets) > 2:
        raise LemmaViolation(f"u2^2 - u1^2 changes sign {len(brackets)} times")
    roots = [brentq(d, a, b, xtol=1e-14) for a, b in brackets]
    left = [r for r in roots if r < x0]
    right = [r for r in roots if r > x0]
    if len(left) > 1 or len(right) > 1:
        raise LemmaViolation("two crossings on the same side of the node of u2")
    return (left[0] if left else 0.0, float(x0), right[0] if right else PI)


def _sign_change_brackets(f: np.ndarray, x: np.ndarray, rel: float = 1e-12) -> list[tuple[float, float]]:
    big = np.abs(f) > rel * np.max(np.abs(f))
    idx = np.flatnonzero(big)
    s = np.sign(f[idx])
    ch = np.flatnonzero(s[1:] != s[:-1])
    return [(float(x[idx[i]]), float(x[idx[i + 1]])) for i in ch]


def count_crossings(sol1: EigenSolution, sol2: EigenSolution) -> int:
    """Grid sign changes of ``u2^2 - u1^2`` in the open interval."""
    x = sol1.x
    d = sol2.at(x) ** 2 - sol1.at(x) ** 2
    return len(_sign_change_brackets(d[1:-1], x[1:-1]))


def gap(V: Any, p: CoefficientP | None = None, bc: BoundaryConditions | None = None,
        **kw: Any) -> GapResult:
    sols = shoot_eigenvalues(p, V, bc, k=2, **kw)
    xm, x0, xp = crossing_points(sols[0], sols[1])
    l1, l2 = sols[0].eigenvalue, sols[1].eigenvalue
    return GapResult(l1, l2, l2 - l1, xm, x0, xp, sols)


def gap_derivative(V: Any, P: Any, p: CoefficientP | None = None,
                   bc: BoundaryConditions | None = None, kind: str = "blend",
                   sols: Sequence[EigenSolution] | None = None, **kw: Any) -> float:
    """Directional derivative of the gap at ``V``.

    ``kind="blend"`` differentiates along ``(1 - k) V1 + k P1`` (direction
    ``P1 - V1``); additive proof kinds differentiate along ``V1 + k P1``.
    The direction is multiplied by V's sign.  If ``lam2`` is numerically
    degenerate with ``lam3`` the smaller branch derivative is returned.
    """
    Vp = as_potential(V) if isinstance(V, (Potential, StepPotential)) else V
    if kind in ADDITIVE_KINDS:
        D = as_potential(P)
    else:
        D = combine(P, Vp, 1.0, -1.0)
    sgn = getattr(Vp, "sign", 1)
    if sols is None:
        sols = shoot_eigenvalues(p, V, bc, k=3, **kw)
    g = lambda a, b=None: sgn * integrate_weighted(a, D.variable_part() if isinstance(D, Potential) else D, b)
    d1 = g(sols[0])
    if len(sols) >= 3 and sols[2].eigenvalue - sols[1].eigenvalue < 1e-12 * max(1.0, abs(sols[1].eigenvalue)):
        mat = np.array([[g(sols[1]), g(sols[1], sols[2])], [g(sols[1], sols[2]), g(sols[2])]])
        d2 = float(np.linalg.eigvalsh(mat)[0])
    else:
        d2 = g(sols[1])
    return d2 - d1


def wronskian_diagnostic(sol1: EigenSolution, sol2: EigenSolution,
                         p: CoefficientP | None = None) -> Wronskian:
    """``W = u2 p u1' - u1 p u2'`` with ``W' = (lam2 - lam1) u1 u2``.

    With this orientation ``(u2/u1)' = -W / (p u1^2)``, so the reported
    margin ``min W / (p u1^2)`` on ``(0, x0)`` is positive exactly when
    ``u2/u1`` is strictly decreasing there.
    """
    p = UNIT_P if p is None else p
    x = sol1.x
    u1, du1 = sol1.u, sol1.du
    if sol2.x.size == x.size and np.array_equal(sol2.x, x):
        u2, du2 = sol2.u, sol2.du
    else:
        u2 = sol2.at(x)
        du2 = sol2._spline.derivative()(x)
    pv = np.asarray(p(x), dtype=float) * np.ones_like(x)
    W = pv * (u2 * du1 - u1 * du2)
    dW = np.gradient(W, x, edge_order=2)
    target = (sol2.eigenvalue - sol1.eigenvalue) * u1 * u2
    res = float(np.max(np.abs(dW - target)[1:-1]))
    rel = res / max(float(np.max(np.abs(target))), 1e-300)
    x0 = crossing_points(sol1, sol2)[1]
    h = float(np.max(np.diff(x)))
    inside = (x > h) & (x < x0 - h) & (np.abs(u1) > 1e-8)
    margin = float(np.min(W[inside] / (pv[inside] * u1[inside] ** 2))) if inside.any() else float("nan")
    return Wronskian(x, W, res, rel, (float(W[0]), float(W[-1])), margin)


def gap_density(sol1: EigenSolution, sol2: EigenSolution,
                extra: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes, weights and ``u2^2 - u1^2`` on the solver mesh plus ``extra``."""
    xq, wq = _quad_nodes(sol1.x, extra)
    return xq, wq, sol2.at(xq) ** 2 - sol1.at(xq) ** 2


def cell_gradient(sol1: EigenSolution, sol2: EigenSolution, bp: np.ndarray) -> np.ndarray:
    """``int_{cell i} (u2^2 - u1^2)``: the gap gradient w.r.t. piecewise-constant heights."""
    xq, wq, d = gap_density(sol1, sol2, bp)
    idx = np.clip(np.searchsorted(bp, xq, side="right") - 1, 0, bp.size - 2)
    return np.bincount(idx, weights=wq * d, minlength=bp.size - 1)


def hat_gradient(sol1: EigenSolution, sol2: EigenSolution, nodes: np.ndarray) -> np.ndarray:
    """``int hat_i (u2^2 - u1^2)``: the gap gradient w.r.t. piecewise-linear node values."""
    xq, wq, d = gap_density(sol1, sol2, nodes)
    j = np.clip(np.searchsorted(nodes, xq, side="right") - 1, 0, nodes.size - 2)
    t = (xq - nodes[j]) / (nodes[j + 1] - nodes[j])
    f = wq * d
    return (np.bincount(j, weights=f * (1 - t), minlength=nodes.size)
            + np.bincount(j + 1, weights=f * t, minlength=nodes.size))
