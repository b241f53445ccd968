import math

import numpy as np
import pytest
from scipy import integrate as sint
from scipy import special

from blockcorr.blockage import BlockageModel, joint_prob
from blockcorr.errors import DegenerateCondition
from blockcorr.numerics import PanelGrid, geometric_breaks
from blockcorr.pathloss import PathLossSpec
from blockcorr.twod import (
    BoundPair,
    NetworkParams2D,
    RateAllocation,
    RateMode,
    assoc_bounds_2d,
    assoc_prob_2d,
    big_g_2d,
    coverage_2d,
    coverage_2d_bounds,
    g_2d,
    g_2d_bounds,
    g_lap_simple_bounds,
    lt_interference_2d,
    rate_coverage_2d,
    serving_pdf_2d,
    sin2_bound_constant,
)
from conftest import BETA_2D, LAM_2D, LMAX_2D, db

GRID_X = [5.0, 20.0, 50.0, 100.0, 200.0]


def test_bound_pair_validation():
    assert BoundPair(0.2, 0.4).contains(0.3)
    with pytest.raises(ValueError):
        BoundPair(0.5, 0.4)


def test_params_validation(blockage2d):
    with pytest.raises(ValueError):
        NetworkParams2D(0.0, blockage2d)


def test_g_at_origin(p2d):
    assert g_2d(p2d, "L", 0.0) == pytest.approx(1.0, abs=1e-15)
    assert g_2d(p2d, "N", 0.0) == 0.0


def _theta_rule():
    # dense Gauss-Legendre, refined near theta = 0 where the correlation peaks
    a, w = np.polynomial.legendre.leggauss(200)
    parts = [(0.0, 0.3), (0.3, math.pi)]
    th = np.concatenate([0.5 * (b - c) * a + 0.5 * (b + c) for c, b in parts])
    wt = np.concatenate([0.5 * (b - c) * w for c, b in parts])
    return th, wt


def _pair_angle_integral(model, s1, s2, r, t):
    th, wt = _theta_rule()
    return 2.0 * np.dot(wt, joint_prob(model, s1, s2, r, t, th))


def _g_brute(params, state, x):
    m, pl, lam = params.blockage, params.pathloss, params.lam
    p_l = math.exp(-m.beta * x)
    J = lambda a, b, t: _pair_angle_integral(m, a, b, x, t) * t
    if state == "L":
        e1 = float(pl.e1(x))
        acc = sint.quad(lambda t: J("L", "L", t), 0, x, limit=200)[0]
        acc += sint.quad(lambda t: J("L", "N", t), 0, e1, limit=200)[0] if e1 > 0 else 0.0
        return p_l * math.exp(-lam * acc / p_l)
    e2 = float(pl.e2(x))
    acc = sint.quad(lambda t: J("N", "N", t), 0, x, limit=200)[0]
    acc += sint.quad(lambda t: J("N", "L", t), 0, e2, limit=200)[0]
    return (1 - p_l) * math.exp(-lam * acc / (1 - p_l))


@pytest.mark.parametrize("state", ["L", "N"])
def test_g_against_angular_brute_force(p2d, state):
    assert g_2d(p2d, state, 50.0) == pytest.approx(_g_brute(p2d, state, 50.0), rel=1e-7)


def test_g_near_degenerate_angles(p2d):
    # r = l_max makes asin(r sin(theta)/l_max) land one ulp from theta
    assert 0 < g_2d(p2d, "L", LMAX_2D) < 1


@pytest.mark.parametrize("state", ["L", "N"])
def test_g_sandwich(p2d, state):
    vals = g_2d(p2d, state, np.array(GRID_X))
    for x, v in zip(GRID_X, vals):
        assert g_2d_bounds(p2d, state, x).contains(v, tol=1e-12), (state, x)


def test_bounds_at_origin(p2d):
    b = g_2d_bounds(p2d, "L", 0.0)
    assert b.lower == pytest.approx(1.0) and b.upper == pytest.approx(1.0)


@pytest.mark.parametrize("x", [10.0, 50.0, 100.0])
def test_maximal_bound_bessel_form_matches_integral(p2d, x):
    beta, lam = p2d.beta, p2d.lam
    e1 = float(p2d.pathloss.e1(x))
    inner = sint.quad(lambda t: 2 * math.pi * t * special.i0e(beta * t / 2), e1, x, epsabs=0, epsrel=1e-12)[0]
    integral_form = math.exp(-beta * x - lam * math.pi * e1 * e1 - lam * inner)
    assert g_2d_bounds(p2d, "L", x).lower == pytest.approx(integral_form, rel=1e-6)


@pytest.mark.parametrize("state", ["L", "N"])
def test_first_order_consistency(p2d, state):
    """The baseline modes run the same pipeline and must reproduce the closed forms."""
    xs = np.array([0.5, 3.0, 12.0, 50.0, 140.0, 400.0])
    ind = g_2d(p2d, state, xs, "independent")
    mx = g_2d(p2d, state, xs, "maximal")
    for x, a, b in zip(xs, ind, mx):
        bd = g_2d_bounds(p2d, state, x)
        iba, maximal = (bd.upper, bd.lower) if state == "L" else (bd.lower, bd.upper)
        assert a == pytest.approx(iba, rel=1e-9, abs=1e-300)
        assert b == pytest.approx(maximal, rel=1e-9, abs=1e-300)


def test_association_total_probability(p2d):
    total = assoc_prob_2d(p2d, "L") + assoc_prob_2d(p2d, "N")
    assert total == pytest.approx(1.0, abs=5e-3)


def test_association_ordering(p2d):
    a = assoc_prob_2d(p2d, "L")
    b = assoc_bounds_2d(p2d)
    assert b.lower <= a <= b.upper
    assert assoc_prob_2d(p2d, "L", "independent") + assoc_prob_2d(p2d, "N", "independent") == pytest.approx(1.0, abs=1e-6)


def test_association_no_blockage():
    p = NetworkParams2D(LAM_2D, BlockageModel.from_beta(1e-7, LMAX_2D))
    assert assoc_prob_2d(p, "L") == pytest.approx(1.0, abs=1e-3)


def test_association_dense_network_lap():
    m = BlockageModel.from_beta(BETA_2D, LMAX_2D)
    vals = [assoc_prob_2d(NetworkParams2D(lam, m, PathLossSpec.lap()), "L") for lam in (3e-4, 3e-3, 3e-2, 3e-1)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 0.99


def test_lap_iba_association(p2d_lap):
    expected = 1 - math.exp(-2 * math.pi * LAM_2D / BETA_2D**2)
    assert expected == pytest.approx(0.6177, abs=1e-4)
    assert assoc_prob_2d(p2d_lap, "L", "independent") == pytest.approx(expected, rel=1e-6)
    assert assoc_prob_2d(p2d_lap, "N") == 0.0


def test_big_g_tail(p2d):
    rs = np.array([0.0, 10.0, 40.0, 100.0, 300.0, 5000.0])
    for state in "LN":
        v = big_g_2d(p2d, state, rs)
        assert np.all(np.diff(v) <= 1e-15)
        assert v[0] == pytest.approx(assoc_prob_2d(p2d, state), rel=1e-10)
        assert v[-1] == 0.0


def test_serving_pdf_normalised(p2d):
    grid = PanelGrid(geometric_breaks(0.0, 1500.0, 0.5, 1.3), 12)
    for state in "LN":
        assert grid.integral(serving_pdf_2d(p2d, state, grid.nodes)) == pytest.approx(1.0, abs=1e-4)


def test_serving_pdf_degenerate(p2d_lap):
    with pytest.raises(DegenerateCondition):
        serving_pdf_2d(p2d_lap, "N", 10.0)


def test_lt_trivial(p2d, p2d_lap):
    assert lt_interference_2d(p2d, "L", "L", 50.0, 0.0) == 1.0
    assert lt_interference_2d(p2d_lap, "N", "L", 50.0, 1e9) == 1.0


def test_lt_in_unit_interval(p2d):
    for v in "LN":
        for u in "LN":
            val = lt_interference_2d(p2d, v, u, 60.0, 1.0 / float(p2d.pathloss.ell(u, 60.0)))
            assert 0 < val <= 1


@pytest.mark.parametrize("r", [20.0, 50.0, 100.0])
def test_lap_los_interference_worse_under_correlation(p2d_lap, r):
    nu = 1.0 / float(p2d_lap.pathloss.ell_L(r))
    corr = lt_interference_2d(p2d_lap, "L", "L", r, nu)
    iba = lt_interference_2d(p2d_lap, "L", "L", r, nu, "independent")
    assert corr <= iba


def test_coverage_monotone(p2d):
    taus = db(np.arange(-20, 41, 2.5))
    vals = coverage_2d(p2d, taus)
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.all((vals >= 0) & (vals <= 1))


def test_coverage_zero_threshold_limits(p2d, p2d_lap):
    total = assoc_prob_2d(p2d, "L") + assoc_prob_2d(p2d, "N")
    assert coverage_2d(p2d, 1e-9) == pytest.approx(total, abs=1e-3)
    assert coverage_2d(p2d_lap, 1e-9) == pytest.approx(assoc_prob_2d(p2d_lap, "L"), abs=1e-3)
    b = coverage_2d_bounds(p2d_lap, 1e-9)
    assert b.contains(assoc_prob_2d(p2d_lap, "L"), tol=1e-6)


def test_coverage_bounds_need_lap(p2d):
    with pytest.raises(ValueError):
        coverage_2d_bounds(p2d, 1.0)


def test_coverage_iba_above_correlated(p2d):
    taus = db(np.array([-10.0, 0.0, 10.0]))
    assert np.all(coverage_2d(p2d, taus, "independent") > coverage_2d(p2d, taus))


def test_rate_coverage_limits(p2d):
    user = NetworkParams2D(LAM_2D, p2d.blockage, user_density=2e-4)
    all_users = RateAllocation(RateMode.EQUAL_ALL)
    los_only = RateAllocation(RateMode.LOS_ONLY)
    assert rate_coverage_2d(user, all_users, 0.0) == pytest.approx(coverage_2d(user, 0.0), abs=1e-12)
    assert rate_coverage_2d(user, los_only, 0.0) == pytest.approx(assoc_prob_2d(user, "L"), abs=1e-3)
    wide = NetworkParams2D(LAM_2D, p2d.blockage, user_density=2e-4, bandwidth=1e20)
    assert rate_coverage_2d(wide, all_users, 5e7) == pytest.approx(coverage_2d(wide, 0.0), abs=1e-4)
    rhos = np.array([1e7, 5e7, 2e8])
    assert np.all(np.diff(rate_coverage_2d(user, all_users, rhos)) <= 0)


def test_users_per_cell():
    p = NetworkParams2D(LAM_2D, BlockageModel.from_beta(BETA_2D, LMAX_2D), user_density=2e-4)
    assert RateAllocation().users_per_cell(p) == pytest.approx(1 + 1.28 * 2e-4 / LAM_2D)
    assert RateAllocation(RateMode.LOS_ONLY).users_per_cell(p, 0.5) == pytest.approx(1 + 1.28 * 1e-4 / LAM_2D)


def test_sin2_constant():
    m = sin2_bound_constant()
    x = np.linspace(0, math.pi / 2, 1000)
    s2 = np.sin(x) ** 2
    assert np.max(1 + m * (x - math.pi / 2) - s2) <= 1e-4
    assert np.max(s2 - m * x) <= 1e-4


def test_simple_bounds(p2d_lap):
    b0 = g_lap_simple_bounds(p2d_lap, 0.0)
    assert b0.lower == pytest.approx(1.0) and b0.upper == pytest.approx(1.0)
    b = g_lap_simple_bounds(p2d_lap, 50.0)
    assert b.contains(g_2d_bounds(p2d_lap, "L", 50.0).lower)
    with pytest.raises(ValueError):
        g_lap_simple_bounds(NetworkParams2D(LAM_2D, p2d_lap.blockage), 5.0)
