import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from gapkit import optimize as opt
from gapkit.potential import PI, Potential, StepPotential
from gapkit.solver import shoot_eigenvalues

# Step-family optima, frozen after cross-checking against Prufer shooting
# on the same step (see test_step_optimum_independent_of_closed_form).
FROZEN = {
    1.0: (0.9395395843056396, 2.823565445874906),
    10.0: (0.48259589790123597, 2.345917623720931),
    50.0: (0.2216491043904828, 2.1486990698160193),
    100.0: (0.156960579600741, 2.103702548327883),
    1e3: (0.04967182213920894, 2.0319976670045037),
    1e4: (0.015707952278206937, 2.0100375086830686),
    1e5: (0.0049672940236130175, 2.003166028051127),
    1e6: (0.0015707963257039566, 2.0010003750116425),
}


def shooting_gap(M, x):
    s = shoot_eigenvalues(None, StepPotential(M, x), k=2)
    return s[1].eigenvalue - s[0].eigenvalue


@pytest.mark.parametrize("M", sorted(FROZEN))
def test_step_family_frozen_values(M):
    rep = opt.minimize_step_family(M)
    x, g = FROZEN[M]
    assert rep.params["x_minus"] == pytest.approx(x, rel=1e-9)
    assert rep.gamma_star == pytest.approx(g, rel=1e-10)
    assert abs(rep.stationarity) < 1e-8


@pytest.mark.parametrize("M", [10.0, 100.0])
def test_step_optimum_independent_of_closed_form(M):
    x0 = FROZEN[M][0]
    res = minimize_scalar(lambda x: shooting_gap(M, x), bounds=(0.8 * x0, 1.2 * x0), method="bounded",
                          options={"xatol": 1e-9})
    assert res.fun == pytest.approx(FROZEN[M][1], rel=1e-9)
    assert res.x == pytest.approx(x0, rel=1e-4)


def test_step_optimum_is_a_minimum():
    M, x = 50.0, FROZEN[50.0][0]
    g = opt.minimize_step_family(M).gamma_star
    for dx in (-1e-3, 1e-3, -0.05, 0.05):
        assert shooting_gap(M, x + dx) > g


def test_gamma_star_decreasing_toward_two():
    g = [FROZEN[M][1] for M in sorted(FROZEN)]
    assert all(b < a for a, b in zip(g, g[1:]))
    assert all(v > 2.0 for v in g)


def test_report_round_trips_through_json():
    rep = opt.minimize_step_family(100.0)
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["class"] == "step-family"
    assert d["params"]["twin"]["side"] == "RIGHT"
    assert d["params"]["twin"]["x_minus"] == pytest.approx(PI - rep.params["x_minus"])


def test_step_family_rejects_nonpositive_M():
    with pytest.raises(ValueError):
        opt.minimize_step_family(0.0)


def test_optimum_branch_survey_reports_trig_ground_state():
    rows = opt.optimum_branch_survey([1e3, 1e5])
    assert all(r["nu1"] > 0 for r in rows)
    assert all(abs(r["y1"]) < 0.1 for r in rows)


def test_l1_distance_to_step():
    V = StepPotential(10.0, 1.0).potential
    d, x, side = opt.l1_distance_to_step(V, 10.0)
    assert d == pytest.approx(0.0, abs=1e-9)
    assert x == pytest.approx(1.0) and side == "LEFT"
    d, x, side = opt.l1_distance_to_step(StepPotential(10.0, 2.0, "RIGHT").potential, 10.0)
    assert side == "RIGHT" and x == pytest.approx(2.0)


def test_single_well_grid_small():
    M = 20.0
    rep = opt.minimize_single_well_grid(M, 8)
    assert rep.checks["single_well"] and rep.checks["bounded"]
    # a grid potential is itself single-well, so it cannot beat the step family
    assert rep.gamma_star >= opt.minimize_step_family(M).gamma_star - 1e-8
    assert rep.gamma_star < 3.0


def test_single_well_grid_trivial_bound():
    rep = opt.minimize_single_well_grid(0.0, 8)
    assert rep.gamma_star == pytest.approx(3.0, abs=1e-8)


@pytest.mark.slow
def test_single_well_grid_refinement_helps():
    M = 20.0
    coarse = opt.minimize_single_well_grid(M, 8)
    fine = opt.minimize_single_well_grid(M, 16)
    assert fine.gamma_star <= coarse.gamma_star + 1e-9


@pytest.mark.parametrize("kwargs", [dict(n_breakpoints=3), dict(sign=0), dict(M=-1.0)])
def test_single_well_grid_validation(kwargs):
    args = dict(M=10.0, n_breakpoints=8) | kwargs
    with pytest.raises(ValueError):
        opt.minimize_single_well_grid(**args)


def test_convex_constant_and_tilted_backgrounds():
    c0 = opt.minimize_convex_pl(10.0, 8)
    assert c0.checks["affine"] and c0.checks["constant"]
    assert c0.gamma_star == pytest.approx(3.0, abs=1e-6)
    c1 = opt.minimize_convex_pl(10.0, 8, V0=Potential.piecewise_linear([0, PI], [0, PI]))
    assert c1.params["slope"] == pytest.approx(-1.0, abs=1e-3)
    assert c1.gamma_star == pytest.approx(3.0, abs=1e-6)


def test_scan_affine_agrees_with_optimizer():
    m, b, g = opt.scan_affine(10.0, n=11)
    assert g == pytest.approx(3.0, abs=1e-6)


def test_first_order_at_step_optimum_and_away():
    good = opt.verify_first_order(opt.minimize_step_family(100.0).potential, "single_well", M=100.0)
    assert min(v for _, v in good) >= -1e-6
    bad = opt.verify_first_order(StepPotential(100.0, PI / 2).potential, "single_well", M=100.0)
    assert min(v for _, v in bad) < -1e-6


def test_first_order_convex():
    fo = opt.verify_first_order(Potential.piecewise_linear(np.linspace(0, PI, 5), [2.0] * 5, kind="convex"),
                                "convex", M=10.0)
    assert fo and min(v for _, v in fo) >= -1e-8
    fo = opt.verify_first_order(Potential.piecewise_linear([0, PI / 2, PI], [5.0, 0.0, 5.0], kind="convex"),
                                "convex", M=10.0)
    assert min(v for _, v in fo) < 0
    with pytest.raises(ValueError):
        opt.verify_first_order(Potential.constant(0.0), "other")


@pytest.mark.parametrize("mode", ["single_well", "convex"])
@pytest.mark.parametrize("name", ["inverse", "inverse_sqrt", "log"])
def test_truncation_is_one_sided(name, mode):
    caps = (1e1, 1e2) if name == "log" else (1e2, 1e3)
    tr = opt.truncation_experiment(name, caps, mode=mode, panels=2048)
    assert tr.monotone
    assert all(r.shift1 <= 1e-12 * tr.reference[1] and r.shift2 <= 1e-12 * tr.reference[1] for r in tr.rows)


@settings(max_examples=20)
@given(st.floats(5.0, 1e4), st.sampled_from(["single_well", "convex"]))
def test_truncated_potential_below_original(M_cap, mode):
    V = opt.DIVERGENT["inverse"]
    f, ell = opt.truncate(V, M_cap, mode)
    x = np.linspace(1e-6, PI, 501)
    assert np.all(f(x) <= V(x) * (1 + 1e-12))
    assert np.all(f(x) <= M_cap * (1 + 1e-12))
    assert 0 < ell <= PI


def test_truncation_rejects_unreachable_cap():
    with pytest.raises(ValueError):
        opt.truncate(opt.DIVERGENT["log"], 1e3)


def test_truncation_rejects_strong_singularity():
    V = opt.Divergent("x^-3", lambda x: x**-3.0, lambda x: -3 * x**-4.0)
    with pytest.raises(ValueError):
        opt.truncation_experiment(V, (1e3,))
