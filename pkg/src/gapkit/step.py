"""Closed-form spectrum of the step potential ``M * chi_[x_minus, pi]``.

Dirichlet conditions, ``p = 1``.  On ``[0, x_minus)`` eigenfunctions are
multiples of ``sin(sqrt(lam) x)``; to the right they are multiples of
``sin(r (pi - x))`` (``lam > M``, ``r^2 = lam - M``), ``sinh(s (pi - x))``
(``lam < M``, ``s^2 = M - lam``) or ``pi - x`` (``lam = M``).

Everything is computed in the offset ``nu = lam - M`` so that large ``M``
does not eat the digits of the gap.  The matching residual used for root
finding is the Wronskian of the left and right solutions at ``x_minus``,
which is an entire function of ``lam`` (no cotangent poles).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

PI = math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


class Branch(enum.Enum):
    TRIG = "trig"
    TANH = "tanh"
    DEGENERATE = "degenerate"


class BranchError(RuntimeError):
    """The located roots disagree with the oscillation count."""


@dataclass(frozen=True)
class StepEigenvalue:
    lam: float
    branch: Branch
    residual: float
    nu: float

    @property
    def lambda_(self) -> float:
        return self.lam


@dataclass(frozen=True)
class RescaledState:
    """``mu = M^-1/2``, ``y = sqrt(M) x_minus`` and ``r`` or ``s``."""

    mu: float
    y: float
    r: float | None = None
    s: float | None = None
    degenerate: bool = False


def _check(M: float, x_minus: float) -> None:
    if not 0.0 < x_minus < PI:
        raise ValueError(f"x_minus must lie in (0, pi), got {x_minus}")
    if M < 0.0:
        raise ValueError("M must be non-negative")


def _right_cs(nu: float, L: float) -> tuple[float, float]:
    """``(C, S)``: value and slope data of the right solution at ``x_minus``.

    The right solution ``v`` vanishes at ``pi`` with ``v'(pi) = -1``; then
    ``v(x_minus) = S`` and ``v'(x_minus) = -C``.  For ``nu < 0`` both are
    divided by ``cosh(s L)`` (a positive factor, so zeros are unchanged).
    """
    z = nu * L * L
    if abs(z) < 1e-8:
        return 1.0 - 0.5 * z, L * (1.0 - z / 6.0)
    if nu > 0.0:
        r = math.sqrt(nu)
        return math.cos(r * L), math.sin(r * L) / r
    s = math.sqrt(-nu)
    return 1.0, math.tanh(s * L) / s


def _left(lam: float, x: float) -> tuple[float, float]:
    """``(sin(k x)/k, cos(k x))`` with the ``k -> 0`` limit handled."""
    k = math.sqrt(lam)
    if k * x < 1e-8:
        return x, 1.0
    return math.sin(k * x) / k, math.cos(k * x)


def _residual_nu(nu: float, M: float, x_minus: float) -> float:
    L = PI - x_minus
    A, B = _left(M + nu, x_minus)
    C, S = _right_cs(nu, L)
    return A * C + B * S


def matching_residual(lam: float, M: float, x_minus: float) -> float:
    """Pole-free matching residual whose zeros are the eigenvalues.

    Equals ``sin(k x)/k * cos(r L) + cos(k x) * sin(r L)/r`` for
    ``lam > M`` (``k = sqrt(lam)``, ``L = pi - x_minus``) and the same with
    hyperbolic functions scaled by ``1/cosh(s L)`` below ``M``.
    """
    _check(M, x_minus)
    if lam <= 0.0:
        raise ValueError("Dirichlet step eigenvalues are positive; lam must be > 0")
    return _residual_nu(lam - M, M, x_minus)


def count_below(nu: float, M: float, x_minus: float) -> int:
    """Number of eigenvalues strictly below ``M + nu`` (Sturm zero count)."""
    lam = M + nu
    if lam <= 0.0:
        return 0
    k = math.sqrt(lam)
    L = PI - x_minus
    zeros = math.floor(k * x_minus / PI)
    A, B = _left(lam, x_minus)
    if nu > 0.0:
        r = math.sqrt(nu)
        psi0 = math.atan2(r * A, B) % PI
        return zeros + math.ceil((psi0 + r * L) / PI) - 1
    C, S = _right_cs(nu, L)
    # with S, C describing the solution vanishing at pi, the left solution
    # evaluated at pi (up to a positive factor) is A*C + B*S
    end = A * C + B * S
    return zeros + int(A * end < 0.0)


def step_eigenvalues(M: float, x_minus: float, k: int = 2, tol: float = 1e-13) -> list[StepEigenvalue]:
    """The ``k`` lowest eigenvalues of the step potential, sorted.

    Each eigenvalue is isolated by bisection on the zero count and then
    refined with Brent's method on :func:`matching_residual`.
    """
    _check(M, x_minus)
    if not 1 <= k <= 8:
        raise ValueError("k must be between 1 and 8")
    out = []
    for n in range(1, k + 1):
        lo, hi = n * n - 0.5 - M, n * n + 1.0
        for _ in range(400):
            nlo, nhi = count_below(lo, M, x_minus), count_below(hi, M, x_minus)
            if nlo == n - 1 and nhi == n:
                break
            mid = 0.5 * (lo + hi)
            if count_below(mid, M, x_minus) >= n:
                hi = mid
            else:
                lo = mid
        else:
            raise BranchError(f"could not isolate eigenvalue {n}")
        f = lambda nu: _residual_nu(nu, M, x_minus)
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0.0:
            raise BranchError(f"residual does not change sign around eigenvalue {n}")
        nu = brentq(f, lo, hi, xtol=tol * max(1.0, abs(lo), abs(hi)) * 1e-2, rtol=4 * np.finfo(float).eps)
        if abs(nu) <= 1e-12 * max(1.0, M):
            branch = Branch.DEGENERATE
        else:
            branch = Branch.TRIG if nu > 0.0 else Branch.TANH
        out.append(StepEigenvalue(M + nu, branch, f(nu), nu))
    return out


def step_gap(M: float, x_minus: float) -> float:
    """``lam2 - lam1`` computed in offset form."""
    e = step_eigenvalues(M, x_minus, 2)
    return e[1].nu - e[0].nu


# ----------------------------------------------------------------- rescaling
def rescale(lam: float, M: float, x_minus: float) -> RescaledState:
    """``r^2 = lam - M`` or ``s^2 = M - lam``, ``y = sqrt(M) x_minus``, ``mu = M^-1/2``."""
    if M <= 0.0:
        raise ValueError("rescaling needs M > 0")
    mu = 1.0 / math.sqrt(M)
    y = math.sqrt(M) * x_minus
    nu = lam - M
    if nu > 0.0:
        return RescaledState(mu, y, r=math.sqrt(nu))
    if nu < 0.0:
        return RescaledState(mu, y, s=math.sqrt(-nu))
    return RescaledState(mu, y, degenerate=True)


def unscale(state: RescaledState) -> tuple[float, float, float]:
    """Inverse of :func:`rescale`: ``(lam, M, x_minus)``."""
    M = 1.0 / state.mu**2
    nu = 0.0
    if state.r is not None:
        nu = state.r**2
    elif state.s is not None:
        nu = -state.s**2
    return M + nu, M, state.y * state.mu


def rescaled_residual(state: RescaledState) -> float:
    """Left side of the rescaled matching equation (tan or tanh form)."""
    mu, y = state.mu, state.y
    L = PI - mu * y
    if state.r is not None:
        r = state.r
        q = math.sqrt(1.0 + mu * mu * r * r)
        return math.tan(r * L) + mu * (r / q) * math.tan(q * y)
    if state.s is not None:
        s = state.s
        q = math.sqrt(1.0 - mu * mu * s * s)
        return math.tanh(s * L) + mu * (s / q) * math.tan(q * y)
    raise ValueError("degenerate state has no rescaled residual; use degenerate_condition")


def residual_to_rescaled(lam: float, M: float, x_minus: float) -> float:
    """Map :func:`matching_residual` onto the rescaled residual.

    For ``lam > M``: ``F * r / (cos(k x_minus) cos(r L))``; below ``M``:
    ``F * s / cos(k x_minus)`` (``F`` already carries ``1/cosh(s L)``).
    """
    F = matching_residual(lam, M, x_minus)
    nu = lam - M
    ck = math.cos(math.sqrt(lam) * x_minus)
    if nu > 0.0:
        r = math.sqrt(nu)
        return F * r / (ck * math.cos(r * (PI - x_minus)))
    return F * math.sqrt(-nu) / ck


def degenerate_condition(M: float, x_minus: float) -> float:
    """C^1 matching of ``sin(sqrt(M) x)`` with ``pi - x`` at ``x_minus``.

    Zero exactly when ``lam = M`` is an eigenvalue:
    ``sin(sqrt(M) x) + sqrt(M) (pi - x) cos(sqrt(M) x) = 0``.
    """
    _check(M, x_minus)
    k = math.sqrt(M)
    return math.sin(k * x_minus) + k * (PI - x_minus) * math.cos(k * x_minus)


def degenerate_condition_as_printed(M: float, x_minus: float) -> float:
    """The printed simplification ``sqrt(M)(pi - x) + sin(sqrt(M) x)``.

    Kept for comparison only: for ``sqrt(M) x < pi`` both terms are
    positive, so it has no roots there, unlike :func:`degenerate_condition`.
    """
    _check(M, x_minus)
    k = math.sqrt(M)
    return k * (PI - x_minus) + math.sin(k * x_minus)


def degenerate_locations(M: float) -> list[float]:
    """All ``x_minus`` in (0, pi) at which ``lam = M`` is an eigenvalue."""
    xs = np.linspace(0.0, PI, 4001)[1:-1]
    g = np.array([degenerate_condition(M, x) for x in xs])
    out = []
    for i in np.flatnonzero(np.sign(g[1:]) != np.sign(g[:-1])):
        out.append(brentq(lambda x: degenerate_condition(M, x), xs[i], xs[i + 1], xtol=1e-15))
    return out


def degenerate_exclusion_threshold(form: str = "derived") -> float:
    """Smallest ``M`` beyond which ``lam = M`` is impossible below ``x_minus <= pi/sqrt(M - 2)``.

    ``form="printed"``: the printed condition needs ``sqrt(M)(pi - x) <= 1``,
    i.e. ``x >= pi - 1/sqrt(M)``, which clashes with the upper bound once
    ``pi/sqrt(M - 2) < pi - 1/sqrt(M)`` (about 3.456).  ``form="derived"``:
    the first root always lies in ``(pi/(2 sqrt M), pi/sqrt M)``, inside the
    bound, so no finite threshold exists and ``inf`` is returned.
    """
    if form == "printed":
        f = lambda M: PI / math.sqrt(M - 2.0) - (PI - 1.0 / math.sqrt(M))
        return brentq(f, 2.0 + 1e-9, 100.0, xtol=1e-14)
    if form == "derived":
        return math.inf
    raise ValueError("form must be 'printed' or 'derived'")


# ----------------------------------------------------------------- eigenfunctions
def _gl(f, a: float, b: float) -> float:
    h = 0.5 * (b - a)
    return float(h * np.sum(_GL_W * f(0.5 * (a + b) + h * _GL_X)))


@dataclass(frozen=True)
class StepEigenfunction:
    """Normalised eigenfunction, ``u > 0`` just right of 0.

    Left of the step ``u = a sin(k x)``; right of it ``u = b w(x)`` where
    ``w`` vanishes at ``pi`` and is normalised by ``w(x_minus) = 1`` (or by
    its slope when ``u(x_minus) = 0``).
    """

    n: int
    M: float
    x_minus: float
    lam: float
    nu: float
    a: float
    b: float
    mode: str  # "value" or "slope" anchoring of w

    def _w(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        L = PI - self.x_minus
        t = PI - x
        nu = self.nu
        if nu > 0.0:
            r = math.sqrt(nu)
            v, dv = np.sin(r * t) / r, -np.cos(r * t)
            v0, dv0 = math.sin(r * L) / r, -math.cos(r * L)
        elif nu < 0.0:
            s = math.sqrt(-nu)
            # sinh(s t) / cosh(s L) without overflow
            e = np.exp(-s * (L - t))
            v = 0.5 * (e - np.exp(-s * (L + t))) / (s * 0.5 * (1 + math.exp(-2 * s * L)))
            dv = -0.5 * (e + np.exp(-s * (L + t))) / (0.5 * (1 + math.exp(-2 * s * L)))
            v0, dv0 = math.tanh(s * L) / s, -1.0
        else:
            v, dv = t, -np.ones_like(t)
            v0, dv0 = L, -1.0
        d = v0 if self.mode == "value" else dv0
        return v / d, dv / d

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(u(x), u'(x))``."""
        x = np.asarray(x, dtype=float)
        k = math.sqrt(self.lam)
        left = x < self.x_minus
        w, dw = self._w(np.where(left, self.x_minus, x))
        u = np.where(left, self.a * np.sin(k * x), self.b * w)
        du = np.where(left, self.a * k * np.cos(k * x), self.b * dw)
        return u, du

    def c1_jump(self) -> float:
        """Relative jump of ``u'/u`` (or of ``u`` if ``u(x_minus) = 0``) at the step."""
        k = math.sqrt(self.lam)
        ul, dl = self.a * math.sin(k * self.x_minus), self.a * k * math.cos(k * self.x_minus)
        w, dw = self._w(np.array([self.x_minus]))
        ur, dr = self.b * float(w[0]), self.b * float(dw[0])
        scale = math.hypot(k * ul, dl)
        return math.hypot(k * (ul - ur), dl - dr) / scale


def step_eigenfunction(M: float, x_minus: float, n: int, eig: StepEigenvalue | None = None) -> StepEigenfunction:
    """Analytic, L2-normalised ``n``-th eigenfunction of the step potential."""
    _check(M, x_minus)
    if eig is None:
        eig = step_eigenvalues(M, x_minus, n)[n - 1]
    lam, nu = eig.lam, eig.nu
    k = math.sqrt(lam)
    xm, L = x_minus, PI - x_minus
    s_, c_ = math.sin(k * xm), math.cos(k * xm)
    C, S = _right_cs(nu, L)
    # anchor w(x_minus) = 1 when the value is informative, otherwise the slope
    if abs(k * s_) >= abs(c_) * abs(S) * k or abs(C) < 1e-300:
        mode, b = "value", s_
    else:
        mode, b = "slope", k * c_
    # int_0^xm sin^2(kx) dx
    z = k * xm
    left2 = xm / 2 - math.sin(2 * z) / (4 * k) if z > 0.5 else _gl(lambda x: np.sin(k * x) ** 2, 0.0, xm)
    proto = StepEigenfunction(n, M, xm, lam, nu, 1.0, 1.0, mode)
    if nu < 0.0 and math.sqrt(-nu) * L > 0.5:
        s = math.sqrt(-nu)
        # w = sinh(s t)/sinh(s L) (value mode) or sinh(s t)/(s cosh(s L)) (slope mode)
        z2 = s * L
        int_sinh2 = 1.0 / (2 * s * math.tanh(z2)) - L / (2 * math.sinh(z2) ** 2) if z2 < 350 else 1.0 / (2 * s)
        right2 = int_sinh2 if mode == "value" else int_sinh2 * math.tanh(z2) ** 2 / s**2
    else:
        panels = max(1, int(math.ceil(math.sqrt(max(nu, 0.0)) * L / 4.0)))
        edges = np.linspace(xm, PI, panels + 1)
        right2 = sum(_gl(lambda x: proto._w(x)[0] ** 2, a, c) for a, c in zip(edges[:-1], edges[1:]))
    norm = math.sqrt(left2 + b * b * right2)
    a, b = 1.0 / norm, b / norm
    return StepEigenfunction(n, M, xm, lam, nu, a, b, mode)


def stationarity(M: float, x_minus: float) -> float:
    """``u2(x_minus)^2 - u1(x_minus)^2``; ``-M`` times this is ``dGamma/dx_minus``."""
    e = step_eigenvalues(M, x_minus, 2)
    u1 = step_eigenfunction(M, x_minus, 1, e[0])
    u2 = step_eigenfunction(M, x_minus, 2, e[1])
    return float(u2(x_minus) ** 2 - u1(x_minus) ** 2)
