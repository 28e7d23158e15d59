import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapkit.checks import SUP_NORM_C, random_single_well
from gapkit.potential import PI, BoundaryConditions, CoefficientP, Potential, StepPotential, combine
from gapkit.solver import (
    LemmaViolation,
    count_crossings,
    crossing_points,
    dense_oracle,
    dense_oracle_extrapolated,
    feynman_hellmann,
    gap,
    gap_derivative,
    integrate_weighted,
    shoot_eigenvalues,
    wronskian_diagnostic,
)

ZERO = Potential.constant(0.0)


def eigs(V, **kw):
    return np.array([s.eigenvalue for s in shoot_eigenvalues(None, V, **kw)])


def test_free_dirichlet_spectrum():
    np.testing.assert_allclose(eigs(ZERO, k=4), [1, 4, 9, 16], atol=1e-8)


def test_free_neumann_spectrum():
    lam = [s.eigenvalue for s in shoot_eigenvalues(None, ZERO, BoundaryConditions.neumann(), k=3)]
    np.testing.assert_allclose(lam, [0, 1, 4], atol=1e-8)


def test_constant_shift_and_scaling():
    np.testing.assert_allclose(eigs(Potential.constant(7.5), k=3), [8.5, 11.5, 16.5], atol=1e-8)
    p = CoefficientP(value=2.0)
    lam = [s.eigenvalue for s in shoot_eigenvalues(p, ZERO, k=2)]
    np.testing.assert_allclose(lam, [2, 8], atol=1e-8)


def test_gap_of_free_problem():
    g = gap(ZERO)
    assert g.gamma == pytest.approx(3.0, abs=1e-8)
    assert g.x_zero == pytest.approx(PI / 2, abs=1e-9)
    # sin(2x)^2 = sin(x)^2 at pi/3 and 2 pi/3
    assert g.x_minus == pytest.approx(PI / 3, abs=1e-8)
    assert g.x_plus == pytest.approx(2 * PI / 3, abs=1e-8)


@pytest.mark.parametrize(
    "V",
    [
        StepPotential(40.0, 1.1),
        Potential.piecewise_linear([0, 1, 2, PI], [5.0, 0.0, 1.0, 9.0]),
        Potential.piecewise_constant([0, 0.7, 2.2, PI], [20.0, 0.0, 20.0]),
    ],
)
def test_shooting_matches_oracle(V):
    a = eigs(V, k=3)
    b = dense_oracle_extrapolated(None, V, k=3, grid_size=4096)
    np.testing.assert_allclose(a, b, rtol=1e-7)


def test_variable_coefficient_matches_oracle():
    p = CoefficientP(lambda x: 1 + x / PI)
    V = Potential.piecewise_constant([0, 1.5, PI], [0.0, 10.0])
    a = [s.eigenvalue for s in shoot_eigenvalues(p, V, k=2)]
    b = dense_oracle_extrapolated(p, V, k=2, grid_size=4096)
    np.testing.assert_allclose(a, b, rtol=1e-6)


def test_oracle_second_order():
    errs = [abs(dense_oracle(None, ZERO, k=2, grid_size=n)[1].eigenvalue - 4) for n in (256, 512)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-2)


def test_eigenfunctions_orthonormal_and_oscillating():
    V = Potential.piecewise_linear([0, 1, PI], [3.0, 0.0, 6.0])
    sols = shoot_eigenvalues(None, V, k=4)
    for i, a in enumerate(sols):
        assert a.sign_changes == i
        assert a.norm2() == pytest.approx(1.0, abs=1e-8)
        for b in sols[i + 1:]:
            assert abs(integrate_weighted(a, 1.0, b)) < 1e-6


def test_symmetric_double_well_gap_is_small():
    V = Potential.piecewise_constant([0, 1.3, 1.84, PI], [0.0, 400.0, 0.0])
    g = shoot_eigenvalues(None, V, k=2)
    assert 0 < g[1].eigenvalue - g[0].eigenvalue < 0.1


def test_feynman_hellmann_against_difference():
    V = Potential.piecewise_constant([0, 1, 2, PI], [4.0, 0.0, 7.0])
    dV = Potential.piecewise_linear([0, PI], [1.0, 0.0])
    h = 1e-4
    for n in (1, 2):
        base = shoot_eigenvalues(None, V, k=n)[n - 1]
        lp = shoot_eigenvalues(None, combine(V, dV, 1, h), k=n)[n - 1].eigenvalue
        lm = shoot_eigenvalues(None, combine(V, dV, 1, -h), k=n)[n - 1].eigenvalue
        assert feynman_hellmann(base, dV) == pytest.approx((lp - lm) / (2 * h), abs=1e-7)


def test_gap_derivative_along_blend():
    V = Potential.piecewise_constant([0, 1, PI], [0.0, 20.0], kind="single_well")
    P = Potential.piecewise_constant([0, 0.5, PI], [0.0, 20.0], kind="single_well")
    d = gap_derivative(V, P)
    h = 1e-4
    from gapkit.potential import blend

    fd = (gap(blend(V, P, h)).gamma - gap(V).gamma) / h
    assert d == pytest.approx(fd, rel=1e-3)


def test_wronskian_identities():
    V = Potential.piecewise_linear([0, 1.2, PI], [8.0, 0.0, 5.0])
    s1, s2 = shoot_eigenvalues(None, V, k=2)
    w = wronskian_diagnostic(s1, s2)
    assert w.relative_residual < 1e-3
    assert abs(w.endpoints[0]) < 1e-8 and abs(w.endpoints[1]) < 1e-8
    assert w.ratio_decrease_margin > 0


def test_crossing_points_reject_higher_states():
    s = shoot_eigenvalues(None, ZERO, k=3)
    with pytest.raises(LemmaViolation):
        crossing_points(s[0], s[2])


def test_input_validation():
    with pytest.raises(ValueError):
        shoot_eigenvalues(None, ZERO, k=0)
    with pytest.raises(ValueError):
        dense_oracle(None, ZERO, grid_size=16)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_single_well_crossing_property(seed):
    V = random_single_well(np.random.default_rng(seed), 100.0, 16)
    s1, s2 = shoot_eigenvalues(None, V, k=2, panels=1024)
    assert count_crossings(s1, s2) <= 2
    xm, x0, xp = crossing_points(s1, s2)
    assert 0 <= xm < x0 < xp <= PI


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1))
def test_sup_norm_bound(seed):
    V = random_single_well(np.random.default_rng(seed), 200.0, 10)
    for s in shoot_eigenvalues(None, V, k=3, panels=1024):
        assert s.sup_norm <= 1.01 * SUP_NORM_C * s.eigenvalue**0.25


@settings(max_examples=25)
@given(st.floats(0.5, 300.0), st.floats(0.05, PI - 0.05))
def test_eigenvalues_monotone_in_potential(M, x):
    low = eigs(StepPotential(M, x), k=2, panels=512)
    high = eigs(StepPotential(M * 1.1, x), k=2, panels=512)
    assert np.all(high >= low - 1e-9)
    assert np.all(low >= np.array([1.0, 4.0]) - 1e-9)
