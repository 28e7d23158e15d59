"""Large-``M`` reduction of the step-family gap problem.

With ``mu = M^-1/2`` and ``y = sqrt(M) x_minus = pi/2 + y1 mu + O(mu^2)``
the leading-order matching equations become

    tan(pi r)  = r / y1     (second eigenvalue, lam2 = M + r^2)
    tanh(pi s) = s / y1     (ground state,      lam1 = M - s^2)

and the gap tends to ``r^2 + s^2``.  Its minimum over admissible ``y1`` is
``(theta/pi)^2`` with ``theta = tan(theta)`` the first positive root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

PI = math.pi
Y1_MIN = 1.0 / PI
Y1_MAX = 3.0 / (2.0 * math.tanh(1.5 * PI))


@dataclass(frozen=True)
class ThetaConstant:
    theta: float
    limit_gap: float
    residual: float


@dataclass(frozen=True)
class ReducedSolution:
    y1: float
    r: float
    s: float
    eta: float
    gap_proxy: float
    s_exists: bool

    @property
    def residual_r(self) -> float:
        return math.sin(PI * self.r) * self.y1 - self.r * math.cos(PI * self.r)

    @property
    def residual_s(self) -> float:
        return math.tanh(PI * self.s) * self.y1 - self.s


def solve_theta() -> ThetaConstant:
    """First positive root of ``tan(theta) = theta``, in (pi, 3 pi / 2)."""
    # sin - theta cos has no poles and the same root on this interval
    f = lambda t: math.sin(t) - t * math.cos(t)
    theta = brentq(f, PI + 1e-9, 1.5 * PI - 1e-9, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return ThetaConstant(theta, (theta / PI) ** 2, math.tan(theta) - theta)


def solve_r(y1: float, branch: int = 1) -> float:
    """Root of ``tan(pi r) = r / y1`` on the branch ``(branch - 1/2, branch + 1/2)``."""
    if y1 <= 0.0:
        raise ValueError("y1 must be positive")
    g = lambda r: y1 * math.sin(PI * r) - r * math.cos(PI * r)
    # the root lies in (branch, branch + 1/2), where r / y1 > 0 meets tan
    return brentq(g, float(branch), branch + 0.5, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def solve_s(y1: float) -> tuple[float, bool]:
    """Positive root of ``tanh(pi s) = s / y1`` (``0`` if none); flag if it exists."""
    if y1 <= 0.0:
        raise ValueError("y1 must be positive")
    if y1 <= Y1_MIN:
        return 0.0, y1 == Y1_MIN
    h = lambda s: y1 * math.tanh(PI * s) - s
    # h > 0 just right of 0 (slope pi y1 - 1 > 0) and h(y1) < 0
    lo = 1e-300
    sl = min(1e-3, (PI * y1 - 1.0)) / PI
    if h(sl) > 0.0:
        lo = sl
    return brentq(h, lo, y1, xtol=1e-16, rtol=4 * np.finfo(float).eps), True


def solve_reduced(y1: float) -> ReducedSolution:
    """``r`` (branch containing 1), ``s``, ``eta`` and ``r^2 + s^2`` at ``y1``."""
    if y1 <= 0.0:
        raise ValueError("y1 must be positive")
    r = solve_r(y1)
    s, ok = solve_s(y1)
    return ReducedSolution(y1, r, s, y1 * (y1 - Y1_MIN), r * r + s * s, ok)


def gap_proxy(y1: float) -> float:
    return solve_reduced(y1).gap_proxy


def gap_proxy_derivative(y1: float) -> float:
    """``d(r^2 + s^2)/dy1 = (2/pi) (s^2/(s^2 - eta) - r^2/(r^2 + eta))``.

    At ``y1 = 1/pi`` both ``s^2`` and ``eta`` vanish; since
    ``s^2 ~ 3 (y1 - 1/pi) / pi`` there, the ``s`` term tends to ``3/2``.
    """
    sol = solve_reduced(y1)
    r2, s2, eta = sol.r**2, sol.s**2, sol.eta
    ts = 1.5 if s2 == 0.0 else s2 / (s2 - eta)
    return 2.0 / PI * (ts - r2 / (r2 + eta))


def implicit_derivative(y1: float) -> float:
    """Same derivative by implicit differentiation of the two root equations."""
    sol = solve_reduced(y1)
    r, s = sol.r, sol.s
    t = math.tan(PI * r)
    dr = -t / (PI * y1 * (1.0 + t * t) - 1.0)
    if s == 0.0:
        return 2 * r * dr + 3.0 / PI
    th = math.tanh(PI * s)
    ds = -th / (PI * y1 * (1.0 - th * th) - 1.0)
    return 2 * r * dr + 2 * s * ds


def minimize_gap_proxy(samples: int = 401) -> tuple[float, float]:
    """Minimise ``r^2 + s^2`` over ``[1/pi, 3 / (2 tanh(3 pi / 2))]``.

    The derivative is positive throughout the open range, so the minimum
    is the left endpoint; a dense scan plus a bounded search confirm it.
    Returns ``(y1_star, gap_star)``.
    """
    from scipy.optimize import minimize_scalar

    ys = np.linspace(Y1_MIN, Y1_MAX, samples)
    vals = np.array([gap_proxy(y) for y in ys])
    i = int(np.argmin(vals))
    lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, samples - 1)]
    res = minimize_scalar(gap_proxy, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    y_star, g_star = (float(res.x), float(res.fun)) if res.fun < vals[i] else (float(ys[i]), float(vals[i]))
    # first-order (KKT) check at the lower bound: a positive derivative
    # means the constrained minimiser sits exactly on it
    if y_star - Y1_MIN < 1e-4 and gap_proxy_derivative(Y1_MIN) > 0.0:
        y_star, g_star = Y1_MIN, gap_proxy(Y1_MIN)
    return y_star, g_star


def critical_point_condition(y1: float) -> float:
    """``s^2 (r^2 + eta) - r^2 (s^2 - eta)``; zero iff ``s^2/r^2 = (s^2 - eta)/(r^2 + eta)``.

    Expands to ``eta (s^2 + r^2)``, so it vanishes only at ``eta = 0``.
    """
    sol = solve_reduced(y1)
    return sol.s**2 * (sol.r**2 + sol.eta) - sol.r**2 * (sol.s**2 - sol.eta)


def x_minus_expansion(M: float) -> float:
    """Two-term expansion ``pi / (2 sqrt(M)) + 1 / (pi M)`` of the optimal step location."""
    if M <= 0.0:
        raise ValueError("M must be positive")
    return PI / (2.0 * math.sqrt(M)) + 1.0 / (PI * M)


def trig_roots(y1: float, count: int = 2) -> list[float]:
    """The ``count`` smallest positive roots of ``y1 sin(pi r) = r cos(pi r)``, any real ``y1``.

    The ``k``-th root lies in ``(k - 1, k - 1/2]`` when ``y1 < 1/pi``
    (the first one shrinking to 0 as ``y1 -> 1/pi``), in ``(k - 1/2, k)``
    when ``y1 < 0``, and the first one disappears for ``y1 >= 1/pi``.
    """
    g = lambda r: y1 * math.sin(PI * r) - r * math.cos(PI * r)
    out: list[float] = []
    for k in range(0, count + 2):
        a, b = max(k - 0.5, 1e-12), k + 0.5
        if g(a) * g(b) < 0.0:
            out.append(brentq(g, a, b, xtol=1e-16, rtol=4 * np.finfo(float).eps))
        # y1 = 0 puts the root exactly on a half-integer node of this grid
        elif g(b) == 0.0:
            out.append(b)
    out = sorted(set(out))
    return out[:count]


def reduced_gap_all_branches(y1: float) -> float:
    """Leading-order gap with every admissible branch for the ground state.

    For ``y1 > 1/pi`` the ground state is the ``s`` branch and the gap is
    ``r^2 + s^2``; for ``y1 < 1/pi`` both eigenvalues lie above ``M`` and the
    gap is ``r2^2 - r1^2`` with ``r1`` the root in ``(0, 1)``.  The two
    pieces meet continuously at ``y1 = 1/pi`` (value ``(theta/pi)^2``).
    """
    if y1 >= Y1_MIN:
        return solve_reduced(y1).gap_proxy
    r1, r2 = trig_roots(y1, 2)
    return r2 * r2 - r1 * r1


def minimize_reduced_all_branches(lo: float = -2.0, hi: float = Y1_MAX) -> tuple[float, float]:
    """Minimise :func:`reduced_gap_all_branches`; returns ``(y1_star, gap_star)``."""
    from scipy.optimize import minimize_scalar

    ys = np.linspace(lo, hi, 801)
    vals = np.array([reduced_gap_all_branches(y) for y in ys])
    i = int(np.argmin(vals))
    res = minimize_scalar(reduced_gap_all_branches, bounds=(ys[max(i - 1, 0)], ys[min(i + 1, ys.size - 1)]),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(res.fun)
