"""Piecewise potentials on [0, pi] and the shape classes they live in.

A potential is stored as ``V = V0 + sign * V1`` where ``V1`` is a
piecewise-linear function (jumps allowed at breakpoints) and ``V0`` is an
optional fixed background of the same kind.  Piecewise-constant data is the
special case ``left == right`` on every segment.

Point evaluation is left-closed: on ``[b_i, b_{i+1})`` the segment ``i``
formula is used, and ``x = pi`` belongs to the last segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

import numpy as np

PI = math.pi
KINDS = ("single_well", "convex", "step", "none")
BLEND_KINDS = ("plateau", "left-fill", "right-fill")
ADDITIVE_KINDS = ("hinge", "left-corner", "right-corner")

_BP_TOL = 1e-12


class DomainError(ValueError):
    """Raised for abscissae outside [0, pi] or malformed breakpoint data."""


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _merge_points(*arrays: Iterable[float]) -> np.ndarray:
    pts = np.sort(np.concatenate([np.asarray(list(a) if not isinstance(a, np.ndarray) else a, dtype=float)
                                  for a in arrays]))
    keep = np.concatenate([[True], np.diff(pts) > _BP_TOL * PI])
    pts = pts[keep]
    pts[0], pts[-1] = 0.0, PI
    return pts


@dataclass(frozen=True, eq=False)
class Potential:
    """Piecewise-linear potential ``V0 + sign * V1`` on [0, pi].

    Attributes:
        breakpoints: Strictly increasing abscissae, first 0 and last pi.
        left: Value of ``V1`` at the left end of each segment.
        right: Value of ``V1`` at the right end of each segment.
        kind: Class tag of ``V1``: single_well, convex, step or none.
        background: Optional fixed ``V0``.
        sign: +1 or -1 applied to ``V1``.
    """

    breakpoints: np.ndarray
    left: np.ndarray
    right: np.ndarray
    kind: str = "none"
    background: Potential | None = None
    sign: int = 1

    def __post_init__(self) -> None:
        bp = np.array(self.breakpoints, dtype=float)
        left = np.array(self.left, dtype=float)
        right = np.array(self.right, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise DomainError("need at least two breakpoints")
        if abs(bp[0]) > 1e-9 or abs(bp[-1] - PI) > 1e-9:
            raise DomainError(f"breakpoints must span [0, pi], got [{bp[0]}, {bp[-1]}]")
        bp[0], bp[-1] = 0.0, PI
        if np.any(np.diff(bp) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if left.shape != (bp.size - 1,) or right.shape != (bp.size - 1,):
            raise DomainError("need one (left, right) pair per segment")
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right))):
            raise DomainError("segment values must be finite")
        if self.kind not in KINDS:
            raise ValueError(f"unknown class tag {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "breakpoints", _frozen(bp))
        object.__setattr__(self, "left", _frozen(left))
        object.__setattr__(self, "right", _frozen(right))
        if self.kind != "none":
            scale = max(1.0, float(np.abs(left).max()), float(np.abs(right).max()))
            c = classify(self, tol=1e-12 * scale)
            ok = {"single_well": c.single_well, "convex": c.convex,
                  "step": c.single_well and self.is_piecewise_constant}[self.kind]
            if not ok:
                raise ValueError(f"segment data is not of class {self.kind!r}")

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, c: float = 0.0, kind: str = "convex") -> Potential:
        return cls([0.0, PI], [c], [c], kind=kind)

    @classmethod
    def piecewise_constant(cls, breakpoints: Sequence[float], values: Sequence[float],
                           kind: str = "none", **kw: Any) -> Potential:
        return cls(breakpoints, values, values, kind=kind, **kw)

    @classmethod
    def piecewise_linear(cls, breakpoints: Sequence[float], node_values: Sequence[float],
                         kind: str = "none", **kw: Any) -> Potential:
        """Continuous interpolant through ``(breakpoints[i], node_values[i])``."""
        v = np.asarray(node_values, dtype=float)
        return cls(breakpoints, v[:-1], v[1:], kind=kind, **kw)

    @classmethod
    def sample(cls, f: Callable[[np.ndarray], np.ndarray], n: int = 256,
               kind: str = "none") -> Potential:
        """Piecewise-linear approximation of ``f`` on a uniform grid of n panels."""
        x = np.linspace(0.0, PI, n + 1)
        return cls.piecewise_linear(x, f(x), kind=kind)

    # -- evaluation ---------------------------------------------------
    @property
    def n_segments(self) -> int:
        return self.left.size

    @property
    def is_piecewise_constant(self) -> bool:
        own = bool(np.all(self.left == self.right))
        return own and (self.background is None or self.background.is_piecewise_constant)

    @property
    def all_breakpoints(self) -> np.ndarray:
        """Breakpoints of ``V1`` merged with those of the background."""
        if self.background is None:
            return self.breakpoints
        return _merge_points(self.breakpoints, self.background.all_breakpoints)

    def _segment_index(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.n_segments - 1)

    def variable(self, x: Any) -> Any:
        """Evaluate ``V1`` alone (no background, no sign)."""
        xa = np.asarray(x, dtype=float)
        i = self._segment_index(xa)
        b0, b1 = self.breakpoints[i], self.breakpoints[i + 1]
        t = (xa - b0) / (b1 - b0)
        out = self.left[i] + (self.right[i] - self.left[i]) * t
        return float(out) if np.ndim(x) == 0 else out

    def __call__(self, x: Any) -> Any:
        out = self.sign * np.asarray(self.variable(x))
        if self.background is not None:
            out = out + np.asarray(self.background(x))
        return float(out) if np.ndim(x) == 0 else out

    def integrate(self, a: Any, b: Any) -> Any:
        """Exact integral of the full potential over ``[a, b]``."""
        return self.antiderivative(b) - self.antiderivative(a)

    def antiderivative(self, x: Any) -> Any:
        xa = np.asarray(x, dtype=float)
        widths = np.diff(self.breakpoints)
        areas = 0.5 * (self.left + self.right) * widths
        cum = np.concatenate([[0.0], np.cumsum(areas)])
        i = self._segment_index(xa)
        b0 = self.breakpoints[i]
        dx = xa - b0
        slope = (self.right[i] - self.left[i]) / widths[i]
        out = self.sign * (cum[i] + self.left[i] * dx + 0.5 * slope * dx * dx)
        if self.background is not None:
            out = out + np.asarray(self.background.antiderivative(xa))
        return float(out) if np.ndim(x) == 0 else out

    def limits_on(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One-sided values of ``V1`` on the segments of a refinement ``points``."""
        mids = 0.5 * (points[:-1] + points[1:])
        i = self._segment_index(mids)
        b0, b1 = self.breakpoints[i], self.breakpoints[i + 1]
        slope = (self.right[i] - self.left[i]) / (b1 - b0)
        lv = self.left[i] + slope * (points[:-1] - b0)
        rv = self.left[i] + slope * (points[1:] - b0)
        return lv, rv

    def refine(self, points: Iterable[float]) -> Potential:
        """Same function with extra breakpoints inserted."""
        bp = _merge_points(self.breakpoints, points)
        lv, rv = self.limits_on(bp)
        return Potential(bp, lv, rv, kind=self.kind, background=self.background, sign=self.sign)

    def with_variable(self, breakpoints: np.ndarray, left: np.ndarray, right: np.ndarray,
                      kind: str = "none") -> Potential:
        """New potential sharing this background and sign."""
        return Potential(breakpoints, left, right, kind=kind, background=self.background,
                         sign=self.sign)

    def variable_part(self) -> Potential:
        """``V1`` as a standalone potential."""
        return Potential(self.breakpoints, self.left, self.right, kind=self.kind)

    def max_abs(self) -> float:
        m = float(max(np.abs(self.left).max(), np.abs(self.right).max()))
        if self.background is not None:
            m += self.background.max_abs()
        return m

    def bounded_by(self, M: float, tol: float = 1e-12) -> bool:
        """True when ``0 <= V1 <= M`` everywhere."""
        lo = min(self.left.min(), self.right.min())
        hi = max(self.left.max(), self.right.max())
        return bool(lo >= -tol and hi <= M + tol)

    def reflect(self) -> Potential:
        return reflect(self)

    # -- json ---------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "breakpoints": [float(b) for b in self.breakpoints],
            "segments": [[float(a), float(b)] for a, b in zip(self.left, self.right)],
            "class": self.kind,
            "background": None if self.background is None else self.background.to_dict(),
            "sign": int(self.sign),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Potential:
        segs = d["segments"]
        left, right = [], []
        for s in segs:
            if isinstance(s, (int, float)):
                left.append(float(s))
                right.append(float(s))
            else:
                left.append(float(s[0]))
                right.append(float(s[1]))
        bg = d.get("background")
        return cls(d["breakpoints"], left, right, kind=d.get("class", "none"),
                   background=None if bg is None else cls.from_dict(bg),
                   sign=int(d.get("sign", 1)))


class Side(str, Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"


@dataclass(frozen=True)
class StepPotential:
    """``M`` times the indicator of an end-adjacent subinterval.

    LEFT means ``V = 0`` on ``[0, x_minus)`` and ``V = M`` on ``[x_minus, pi]``;
    RIGHT is its mirror image, ``V = M`` on ``[0, x_minus)``.
    """

    M: float
    x_minus: float
    side: Side = Side.LEFT

    def __post_init__(self) -> None:
        if not self.M > 0:
            raise ValueError("step height M must be positive")
        if not 0.0 < self.x_minus < PI:
            raise DomainError("step location must lie in (0, pi)")
        object.__setattr__(self, "side", Side(self.side))

    @property
    def potential(self) -> Potential:
        vals = [0.0, self.M] if self.side is Side.LEFT else [self.M, 0.0]
        return Potential.piecewise_constant([0.0, self.x_minus, PI], vals, kind="step")

    @property
    def breakpoints(self) -> np.ndarray:
        return self.potential.breakpoints

    all_breakpoints = breakpoints
    kind = "step"
    background = None
    sign = 1
    is_piecewise_constant = True

    def __call__(self, x: Any) -> Any:
        return self.potential(x)

    def variable(self, x: Any) -> Any:
        return self.potential.variable(x)

    def integrate(self, a: Any, b: Any) -> Any:
        return self.potential.integrate(a, b)

    def reflect(self) -> StepPotential:
        other = Side.RIGHT if self.side is Side.LEFT else Side.LEFT
        return StepPotential(self.M, PI - self.x_minus, other)

    def to_dict(self) -> dict[str, Any]:
        return self.potential.to_dict()


AnyPotential = Potential | StepPotential


def as_potential(V: AnyPotential) -> Potential:
    return V.potential if isinstance(V, StepPotential) else V


def evaluate(V: AnyPotential, x: Any) -> Any:
    """Evaluate ``V`` at ``x`` in [0, pi]; raises DomainError outside."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > PI) or np.any(~np.isfinite(xa)):
        raise DomainError("abscissa outside [0, pi]")
    return V(x)


@dataclass(frozen=True)
class Classification:
    """Shape of ``V1``.

    ``transition`` is the closed interval of admissible transition points
    (least value first) when ``single_well`` holds, else None.
    """

    single_well: bool
    transition: tuple[float, float] | None
    convex: bool

    @property
    def label(self) -> str:
        if self.convex:
            return "convex"
        return "single_well" if self.single_well else "neither"

    @property
    def a(self) -> float | None:
        return None if self.transition is None else self.transition[0]


def classify(V: AnyPotential, tol: float = 0.0) -> Classification:
    """Classify ``V1`` as single-well (with transition interval), convex, or neither.

    The knot sequence (segment left value, segment right value, ...) is
    scanned for its longest non-increasing prefix and longest non-decreasing
    suffix; the function is single-well exactly when they overlap.
    """
    V = as_potential(V)
    bp, left, right = V.breakpoints, V.left, V.right
    n = left.size
    vals = np.empty(2 * n)
    vals[0::2], vals[1::2] = left, right
    pos = np.empty(2 * n)
    pos[0::2], pos[1::2] = bp[:-1], bp[1:]

    dv = np.diff(vals)
    up = dv > tol
    down = dv < -tol
    # last index of the non-increasing prefix, first index of the non-decreasing suffix
    i_dec = int(np.argmax(up)) if up.any() else vals.size - 1
    j_inc = int(vals.size - 1 - np.argmax(down[::-1])) if down.any() else 0
    single = j_inc <= i_dec
    transition = (float(pos[j_inc]), float(pos[i_dec])) if single else None

    jumps = np.abs(right[:-1] - left[1:]) > tol
    slopes = (right - left) / np.diff(bp)
    convex = bool(not jumps.any() and np.all(np.diff(slopes) >= -tol))
    return Classification(bool(single), transition, convex)


def reflect(V: AnyPotential) -> AnyPotential:
    """The potential ``x -> V(pi - x)``; class tags are kept."""
    if isinstance(V, StepPotential):
        return V.reflect()
    bg = None if V.background is None else reflect(V.background)
    return Potential(PI - V.breakpoints[::-1], V.right[::-1], V.left[::-1], kind=V.kind,
                     background=bg, sign=V.sign)


def _same_background(a: Potential | None, b: Potential | None) -> bool:
    if a is None or b is None:
        return a is b
    if a is b:
        return True
    return (a.sign == b.sign and np.array_equal(a.breakpoints, b.breakpoints)
            and np.array_equal(a.left, b.left) and np.array_equal(a.right, b.right)
            and _same_background(a.background, b.background))


def combine(V: AnyPotential, P: AnyPotential, wv: float, wp: float,
            kind: str = "none") -> Potential:
    """``wv * V1 + wp * P1`` on the merged breakpoints, with V's background and sign."""
    V, P = as_potential(V), as_potential(P)
    bp = _merge_points(V.breakpoints, P.breakpoints)
    vl, vr = V.limits_on(bp)
    pl, pr = P.limits_on(bp)
    return V.with_variable(bp, wv * vl + wp * pl, wv * vr + wp * pr, kind=kind)


def blend(V: AnyPotential, P: AnyPotential, kappa: float) -> Potential:
    """Pointwise ``(1 - kappa) V1 + kappa P1``.

    The result keeps a shared class tag when the blended data still
    satisfies it (two single-well functions with a common transition point
    stay single-well; convex combinations of convex functions stay convex).
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    Vp, Pp = as_potential(V), as_potential(P)
    if Pp.background is not None and not _same_background(Vp.background, Pp.background):
        raise ValueError("incompatible backgrounds")
    out = combine(Vp, Pp, 1.0 - kappa, kappa)
    kv = "single_well" if Vp.kind == "step" else Vp.kind
    kp = "single_well" if Pp.kind == "step" else Pp.kind
    if kv == kp and kv != "none":
        c = classify(out, tol=1e-12 * max(1.0, out.max_abs()))
        if (kv == "convex" and c.convex) or (kv == "single_well" and c.single_well):
            out = out.with_variable(out.breakpoints, out.left, out.right, kind=kv)
    return out


def _fill(V: Potential, lo: float, hi: float, value: float) -> Potential:
    """Replace ``V1`` by ``value`` on ``[lo, hi]``."""
    R = V.refine([lo, hi])
    mids = 0.5 * (R.breakpoints[:-1] + R.breakpoints[1:])
    inside = (mids > lo) & (mids < hi)
    left = np.where(inside, value, R.left)
    right = np.where(inside, value, R.right)
    return V.with_variable(R.breakpoints, left, right)


def proof_perturbation(V: AnyPotential, kind: str, *, x_minus: float | None = None,
                       x_plus: float | None = None, anchor: float | None = None,
                       x_n: float | None = None) -> Potential:
    """Comparison functions used in the optimality arguments.

    Blend kinds (the result ``P`` enters as ``(1 - k) V1 + k P``):

    * ``plateau``: ``V1`` outside ``[x_minus, x_plus]``, and
      ``max(V1(x_minus), V1(x_plus))`` inside.
    * ``left-fill``: ``V1(anchor)`` on ``[0, anchor]``, ``V1`` elsewhere.
    * ``right-fill``: ``V1(anchor)`` on ``[anchor, pi]``, ``V1`` elsewhere.

    Additive kinds (``P`` enters as ``V1 + t P``, small ``t >= 0``):

    * ``hinge``: the tent ``(x - x_minus)/(x_n - x_minus)`` left of ``x_n`` and
      ``(x_plus - x)/(x_plus - x_n)`` right of it, extended linearly.
    * ``left-corner``: ``(x - x_n)`` on ``[0, x_n]``, zero after.
    * ``right-corner``: ``(x_n - x)`` on ``[x_n, pi]``, zero before.
    """
    Vp = as_potential(V)
    bg = dict(background=Vp.background, sign=Vp.sign)

    def need(*names_vals: tuple[str, float | None]) -> list[float]:
        out = []
        for name, v in names_vals:
            if v is None:
                raise ValueError(f"{kind} needs {name}")
            if not 0.0 <= v <= PI:
                raise DomainError(f"{name}={v} outside [0, pi]")
            out.append(float(v))
        return out

    if kind == "plateau":
        lo, hi = need(("x_minus", x_minus), ("x_plus", x_plus))
        if not lo < hi:
            raise ValueError("anchors out of order: need x_minus < x_plus")
        level = max(Vp.variable(lo), Vp.variable(hi))
        return _fill(Vp, lo, hi, level)
    if kind == "left-fill":
        (c,) = need(("anchor", anchor))
        return _fill(Vp, 0.0, c, Vp.variable(c)) if c > 0 else Vp.with_variable(
            Vp.breakpoints, Vp.left, Vp.right)
    if kind == "right-fill":
        (c,) = need(("anchor", anchor))
        return _fill(Vp, c, PI, Vp.variable(c)) if c < PI else Vp.with_variable(
            Vp.breakpoints, Vp.left, Vp.right)
    if kind == "hinge":
        lo, c, hi = need(("x_minus", x_minus), ("x_n", x_n), ("x_plus", x_plus))
        if not lo < c < hi:
            raise ValueError("anchors out of order: need x_minus < x_n < x_plus")
        nodes = [(0.0 - lo) / (c - lo), 1.0, (hi - PI) / (hi - c)]
        return Potential.piecewise_linear([0.0, c, PI], nodes, **bg)
    if kind in ("left-corner", "right-corner"):
        (c,) = need(("x_n", x_n))
        if not 0.0 < c < PI:
            raise ValueError("corner must be interior")
        if kind == "left-corner":
            return Potential.piecewise_linear([0.0, c, PI], [-c, 0.0, 0.0], **bg)
        return Potential.piecewise_linear([0.0, c, PI], [0.0, 0.0, c - PI], **bg)
    raise ValueError(f"unknown perturbation kind {kind!r}")


def direction(V: AnyPotential, P: Potential, kind: str) -> Potential:
    """Derivative of ``V1`` along the family generated by ``P`` (unsigned)."""
    if kind in ADDITIVE_KINDS:
        return as_potential(V).with_variable(P.breakpoints, P.left, P.right)
    return combine(P, V, 1.0, -1.0)


def apply_perturbation(V: AnyPotential, P: Potential, kind: str, kappa: float) -> Potential:
    """Member of the perturbation family at parameter ``kappa``."""
    if kind in ADDITIVE_KINDS:
        return combine(V, P, 1.0, kappa)
    return blend(V, P, kappa)


def admissible_kappa(V: AnyPotential, P: Potential, kind: str, M: float | None = None,
                     target: str | None = None, tol: float = 1e-12) -> float:
    """Largest ``kappa`` in [0, 1] for which the family stays in the class.

    The class is ``target`` (default: V's tag), optionally intersected with
    ``0 <= V1 <= M``.  Found by bisection, since the admissible set is an
    interval containing 0 for all the proof perturbations.
    """
    target = target or ("single_well" if as_potential(V).kind == "step" else as_potential(V).kind)

    def ok(k: float) -> bool:
        W = apply_perturbation(V, P, kind, k)
        c = classify(W, tol=tol * max(1.0, W.max_abs()))
        good = {"convex": c.convex, "single_well": c.single_well, "none": True}[target]
        if M is not None:
            good = good and W.bounded_by(M, tol=tol * max(1.0, M))
        return good

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def load_potential(path: str) -> Potential:
    with open(path) as fh:
        return Potential.from_dict(json.load(fh))


def dump_potential(V: AnyPotential, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(V.to_dict(), fh, indent=2)


@dataclass(frozen=True)
class CoefficientP:
    """Leading coefficient ``p(x)``, uniformly positive on [0, pi]."""

    func: Callable[[np.ndarray], np.ndarray] | None = None
    value: float = 1.0
    p_min: float = field(default=0.0)

    def __post_init__(self) -> None:
        xs = np.linspace(0.0, PI, 1025)
        vals = self(xs)
        lo = float(np.min(vals))
        if not np.all(np.isfinite(vals)) or lo <= 0.0:
            raise ValueError("p must be finite and uniformly positive")
        if self.p_min and lo < self.p_min:
            raise ValueError(f"p drops below declared lower bound {self.p_min}")
        if not self.p_min:
            object.__setattr__(self, "p_min", lo)

    @property
    def is_constant(self) -> bool:
        return self.func is None

    def __call__(self, x: Any) -> Any:
        if self.func is None:
            return np.full_like(np.asarray(x, dtype=float), self.value) if np.ndim(x) else self.value
        return self.func(x)


UNIT_P = CoefficientP()


@dataclass(frozen=True)
class BoundaryConditions:
    """Separated conditions ``u cos(a) - (p u') sin(a) = 0`` at each end.

    ``alpha`` applies at 0 and ``beta`` at pi; both lie in [0, pi).
    """

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v < PI:
                raise ValueError(f"{name} must lie in [0, pi)")

    @classmethod
    def dirichlet(cls) -> BoundaryConditions:
        return cls(0.0, 0.0)

    @classmethod
    def neumann(cls) -> BoundaryConditions:
        return cls(PI / 2, PI / 2)

    @classmethod
    def parse(cls, spec: str) -> BoundaryConditions:
        """Parse ``dirichlet``, ``neumann`` or ``angles:a,b``."""
        s = spec.strip().lower()
        if s == "dirichlet":
            return cls.dirichlet()
        if s == "neumann":
            return cls.neumann()
        if s.startswith("angles:"):
            a, b = (float(t) for t in s[len("angles:"):].split(","))
            return cls(a, b)
        raise ValueError(f"unrecognised boundary condition {spec!r}")

    @property
    def is_dirichlet(self) -> bool:
        return self.alpha == 0.0 and self.beta == 0.0


DIRICHLET = BoundaryConditions.dirichlet()
