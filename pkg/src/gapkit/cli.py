"""Command-line front end: ``gapkit solve|step|minimize|sweep|asymptotics|verify``.

Every JSON document carries ``"schema": "gapkit/1"``.  Failures print a
JSON error object on stderr and exit with a code from :data:`EXIT_CODES`.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import asymptotics as asy
from . import optimize as opt
from . import step as stp
from .potential import BoundaryConditions, DomainError, Potential, load_potential
from .solver import ConvergenceError, LemmaViolation, crossing_points, dense_oracle, shoot_eigenvalues

SCHEMA = "gapkit/1"

EXIT_CODES = {
    "ok": 0,
    "internal": 1,
    "usage": 2,
    "io": 3,
    "invalid": 4,
    "convergence": 5,
    "lemma": 6,
    "verify": 7,
}

_EPILOG = """exit codes:
  0  success
  1  unexpected internal error
  2  bad command-line flags
  3  unreadable or malformed input file
  4  argument outside the valid domain
  5  eigenvalue or optimiser failed to converge
  6  more than two crossings of u2^2 - u1^2 (solver inconsistency)
  7  verify --strict found a failing check

environment:
  GAPKIT_THREADS  worker count for `sweep` (default: CPU count)
"""


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError("usage", f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """Validated command configuration."""

    command: str
    potential: str | None = None
    bc: str = "dirichlet"
    k: int = 2
    M: float | None = None
    M_grid: list[float] = field(default_factory=list)
    x_minus: float | None = None
    cls: str = "step"
    V0: str | None = None
    sign: int = 1
    n_breakpoints: int | None = None
    tol: float = 1e-10
    seed: int = 0
    out: str = "json"
    output: str | None = None
    method: str = "shoot"
    strict: bool = False
    quick: bool = False


# ------------------------------------------------------------------ parsing
def parse_grid(spec: str) -> list[float]:
    """``log:a,b,n``, ``lin:a,b,n`` or a comma-separated list."""
    try:
        if ":" in spec:
            kind, rest = spec.split(":", 1)
            a, b, n = rest.split(",")
            a_, b_, n_ = float(a), float(b), int(n)
            if n_ < 1:
                raise ValueError
            if kind == "log":
                if a_ <= 0 or b_ <= 0:
                    raise ValueError
                return [float(v) for v in np.geomspace(a_, b_, n_)]
            if kind == "lin":
                return [float(v) for v in np.linspace(a_, b_, n_)]
            raise ValueError
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise CliError("invalid", f"bad grid specification {spec!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gapkit", description="Fundamental gap toolkit for Sturm-Liouville operators on [0, pi].",
                epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser, fmt: Sequence[str] = ("json",)) -> None:
        sp.add_argument("--out", choices=fmt, default=fmt[0], help="output format")
        sp.add_argument("--output", help="write to this file instead of stdout")

    s = sub.add_parser("solve", help="lowest eigenpairs of a potential file")
    s.add_argument("--potential", required=True)
    s.add_argument("--bc", default="dirichlet", help="dirichlet | neumann | angles:a,b")
    s.add_argument("-k", type=int, default=2)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--method", choices=("shoot", "oracle"), default="shoot")
    common(s, ("json", "csv"))

    s = sub.add_parser("step", help="closed-form step-potential eigenvalues")
    s.add_argument("--M", type=float, required=True)
    s.add_argument("--xminus", type=float, required=True)
    s.add_argument("-k", type=int, default=2)
    common(s)

    s = sub.add_parser("minimize", help="minimise the gap over a potential class")
    s.add_argument("--class", dest="cls", choices=("step", "single-well", "convex"), default="step")
    s.add_argument("--M", type=float, required=True)
    s.add_argument("--V0", help="background potential file")
    s.add_argument("--sign", choices=("+", "-"), default="+")
    s.add_argument("--n-breakpoints", type=int)
    common(s)

    s = sub.add_parser("sweep", help="step-family optimum over a grid of M")
    s.add_argument("--M-grid", default="log:0.5,1e6,25")
    common(s, ("csv", "json"))

    s = sub.add_parser("asymptotics", help="limit constant and large-M table")
    s.add_argument("--M-grid", default="1e2,1e3,1e4,1e5,1e6")
    common(s)

    s = sub.add_parser("verify", help="run the invariant suite and print a pass/fail table")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--strict", action="store_true", help="exit 7 if any check fails")
    s.add_argument("--quick", action="store_true", help="smaller randomized samples")
    common(s, ("text", "json"))
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command, out=ns.out, output=ns.output)
    if ns.command == "solve":
        cfg.potential, cfg.bc, cfg.k, cfg.tol, cfg.method = ns.potential, ns.bc, ns.k, ns.tol, ns.method
        if cfg.k < 1:
            raise CliError("invalid", "-k must be at least 1")
        if cfg.out == "csv" and cfg.k < 2:
            raise CliError("invalid", "csv output needs -k >= 2 (columns x, u1, u2, V)")
        if not cfg.tol > 0:
            raise CliError("invalid", "--tol must be positive")
    elif ns.command == "step":
        cfg.M, cfg.x_minus, cfg.k = ns.M, ns.xminus, ns.k
        if not (cfg.M >= 0 and math.isfinite(cfg.M)):
            raise CliError("invalid", "--M must be a finite non-negative number")
        if not 0 < cfg.x_minus < math.pi:
            raise CliError("invalid", "--xminus must lie in (0, pi)")
        if not 1 <= cfg.k <= 8:
            raise CliError("invalid", "-k must be between 1 and 8")
    elif ns.command == "minimize":
        cfg.M, cfg.cls, cfg.V0, cfg.n_breakpoints = ns.M, ns.cls, ns.V0, ns.n_breakpoints
        cfg.sign = 1 if ns.sign == "+" else -1
        if not (cfg.M > 0 and math.isfinite(cfg.M)):
            raise CliError("invalid", "--M must be positive and finite")
        if cfg.n_breakpoints is not None:
            need = 4 if cfg.cls == "single-well" else 3
            if cfg.n_breakpoints < need:
                raise CliError("invalid", f"--n-breakpoints must be at least {need}")
        if cfg.cls == "step" and (cfg.V0 is not None or cfg.sign != 1):
            raise CliError("invalid", "the step class has no background or sign option")
    elif ns.command in ("sweep", "asymptotics"):
        cfg.M_grid = parse_grid(ns.M_grid)
        if not cfg.M_grid or any(not (m > 0 and math.isfinite(m)) for m in cfg.M_grid):
            raise CliError("invalid", "every M must be positive and finite")
    elif ns.command == "verify":
        cfg.seed, cfg.strict, cfg.quick = ns.seed, ns.strict, ns.quick
    return cfg


# ------------------------------------------------------------------ commands
def _doc(command: str, **payload: Any) -> dict[str, Any]:
    return {"schema": SCHEMA, "command": command, **payload}


def _load(path: str) -> Potential:
    try:
        return load_potential(path)
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc.strerror or exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CliError("io", f"malformed potential file {path}: {exc}") from None


def cmd_solve(cfg: RunConfig) -> str:
    V = _load(cfg.potential)  # type: ignore[arg-type]
    bc = BoundaryConditions.parse(cfg.bc)
    if cfg.method == "shoot":
        sols = shoot_eigenvalues(None, V, bc, k=cfg.k, tol=cfg.tol)
    else:
        sols = dense_oracle(None, V, bc, k=cfg.k, grid_size=max(2048, 64 * cfg.k))
    if cfg.out == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u1", "u2", "V"])
        x = sols[0].x
        for row in zip(x, sols[0].u, sols[1].at(x), V(x)):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()
    payload: dict[str, Any] = {
        "method": cfg.method,
        "bc": {"alpha": bc.alpha, "beta": bc.beta},
        "eigenvalues": [s.eigenvalue for s in sols],
        "sign_changes": [s.sign_changes for s in sols],
        "sup_norm": [s.sup_norm for s in sols],
    }
    for i, s in enumerate(sols[:2], start=1):
        payload[f"lambda{i}"] = s.eigenvalue
    if len(sols) >= 2:
        payload["gamma"] = sols[1].eigenvalue - sols[0].eigenvalue
        try:
            xm, x0, xp = crossing_points(sols[0], sols[1])
            payload.update(x_minus=xm, x_zero=x0, x_plus=xp)
        except LemmaViolation:
            if bc.is_dirichlet:
                raise
    if not bc.is_dirichlet:
        payload["exploratory"] = True
    return json.dumps(_doc("solve", **payload), indent=2)


def cmd_step(cfg: RunConfig) -> str:
    eigs = stp.step_eigenvalues(cfg.M, cfg.x_minus, cfg.k)  # type: ignore[arg-type]
    payload = {
        "M": cfg.M,
        "x_minus": cfg.x_minus,
        "eigenvalues": [{"lambda": e.lam, "nu": e.nu, "branch": e.branch.value, "residual": e.residual}
                        for e in eigs],
    }
    if cfg.k >= 2:
        payload["gamma"] = eigs[1].nu - eigs[0].nu
    return json.dumps(_doc("step", **payload), indent=2)


def cmd_minimize(cfg: RunConfig) -> str:
    V0 = _load(cfg.V0) if cfg.V0 else None
    if cfg.cls == "step":
        rep = opt.minimize_step_family(cfg.M)  # type: ignore[arg-type]
    elif cfg.cls == "single-well":
        rep = opt.minimize_single_well_grid(cfg.M, cfg.n_breakpoints or 32, V0=V0, sign=cfg.sign)  # type: ignore[arg-type]
    else:
        if cfg.sign != 1:
            raise CliError("invalid", "the convex class takes V0 + V1 only")
        rep = opt.minimize_convex_pl(cfg.M, cfg.n_breakpoints or 16, V0=V0)  # type: ignore[arg-type]
    payload = rep.to_dict()
    if cfg.sign == -1:
        payload["exploratory"] = True
    return json.dumps(_doc("minimize", **payload), indent=2)


def _threads() -> int:
    raw = os.environ.get("GAPKIT_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise CliError("invalid", f"GAPKIT_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise CliError("invalid", "GAPKIT_THREADS must be at least 1")
    return n


def sweep_rows(grid: Sequence[float], threads: int = 1) -> list[dict[str, float]]:
    """Step-family optimum for every ``M``; order follows ``grid``."""

    def one(M: float) -> dict[str, float]:
        r = opt.minimize_step_family(M)
        return {"M": M, "x_minus_star": r.params["x_minus"], "lambda1": r.lambda1,
                "lambda2": r.lambda2, "gamma_star": r.gamma_star}

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, grid))


def cmd_sweep(cfg: RunConfig) -> str:
    rows = sweep_rows(cfg.M_grid, _threads())
    if cfg.out == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["M", "x_minus_star", "lambda1", "lambda2", "gamma_star"]
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in cols])
        return buf.getvalue()
    return json.dumps(_doc("sweep", rows=rows), indent=2)


def cmd_asymptotics(cfg: RunConfig) -> str:
    th = asy.solve_theta()
    y1, g = asy.minimize_gap_proxy()
    y1a, ga = asy.minimize_reduced_all_branches()
    table = []
    for M in cfg.M_grid:
        r = opt.minimize_step_family(M)
        table.append({"M": M, "gamma_star": r.gamma_star, "gamma_star_minus_limit": r.gamma_star - th.limit_gap,
                      "x_minus_star": r.params["x_minus"], "x_minus_expansion": asy.x_minus_expansion(M)})
    return json.dumps(_doc("asymptotics", theta=th.theta, limit_gap=th.limit_gap, y1_star=y1, gap_star=g,
                           all_branches={"y1_star": y1a, "gap_star": ga}, table=table), indent=2)


def cmd_verify(cfg: RunConfig) -> tuple[str, bool]:
    from .checks import run_checks

    rows = run_checks(seed=cfg.seed, quick=cfg.quick)
    ok = all(r["status"] == "PASS" for r in rows)
    if cfg.out == "json":
        return json.dumps(_doc("verify", seed=cfg.seed, passed=ok, checks=rows), indent=2), ok
    width = max(len(r["claim"]) for r in rows)
    lines = [f"{'claim'.ljust(width)}  status  check"]
    for r in rows:
        lines.append(f"{r['claim'].ljust(width)}  {r['status']:<6}  {r['check']}: {r['detail']}")
    lines.append(f"seed={cfg.seed} passed={sum(r['status'] == 'PASS' for r in rows)}/{len(rows)}")
    return "\n".join(lines) + "\n", ok


COMMANDS: dict[str, Callable[[RunConfig], Any]] = {
    "solve": cmd_solve,
    "step": cmd_step,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration, writing its artifact; returns the exit code."""
    result = COMMANDS[cfg.command](cfg)
    ok = True
    if isinstance(result, tuple):
        result, ok = result
    text = result if result.endswith("\n") else result + "\n"
    if cfg.output:
        try:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError("io", f"cannot write {cfg.output}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)
    return EXIT_CODES["verify"] if (cfg.strict and not ok) else EXIT_CODES["ok"]


def _fail(kind: str, message: str) -> int:
    code = EXIT_CODES[kind]
    sys.stderr.write(json.dumps({"schema": SCHEMA, "error": kind, "message": message, "code": code}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        return run(config_from_args(ns))
    except CliError as exc:
        return _fail(exc.kind, str(exc))
    except LemmaViolation as exc:
        return _fail("lemma", str(exc))
    except (ConvergenceError, stp.BranchError) as exc:
        return _fail("convergence", str(exc))
    except (DomainError, ValueError) as exc:
        return _fail("invalid", str(exc))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # pragma: no cover - last-resort reporting
        return _fail("internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
