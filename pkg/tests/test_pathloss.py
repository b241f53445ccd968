import math

import mpmath
import numpy as np
import pytest

from blockcorr.errors import InvalidPathLoss
from blockcorr.numerics import find_root_increasing
from blockcorr.pathloss import LinkState, PathLossSpec, ell, excl_e1, excl_e2

BPLP = PathLossSpec.bplp()
LAP = PathLossSpec.lap()


def test_ell_examples():
    assert ell(BPLP, "L", 0.5) == 1e-6
    assert ell(BPLP, "L", 10.0) == pytest.approx(1e-6 * 10 ** -2.2, rel=1e-12)
    assert ell(LAP, "N", 37.0) == 0.0
    assert ell(BPLP, LinkState.N, 1.0) == 1e-7


def test_derived_constants():
    assert BPLP.c == pytest.approx(0.52750, abs=1e-5)
    assert BPLP.alpha == pytest.approx(0.61111, abs=1e-5)
    assert BPLP.e1_knee == pytest.approx(2.848, abs=1e-3)


def _root_e1(x):
    level = ell(BPLP, "L", x)
    return find_root_increasing(lambda y: level - ell(BPLP, "N", y), 0.0, 10 * x + 1e4, 1e-12)


def test_e1_examples():
    assert excl_e1(BPLP, 2.0) == 0.0
    assert excl_e1(BPLP, 10.0) == pytest.approx(2.154, abs=1e-3)
    assert excl_e1(BPLP, 10.0) == pytest.approx(_root_e1(10.0), rel=1e-6)
    assert excl_e1(LAP, 50.0) == 0.0


def test_e2_examples():
    c, a = BPLP.c, BPLP.alpha
    assert excl_e2(BPLP, 0.5) == pytest.approx((1 / c) ** (1 / a), rel=1e-12)
    assert excl_e2(BPLP, 0.5) == pytest.approx(2.848, abs=1e-3)
    level = ell(BPLP, "N", 10.0)
    oracle = find_root_increasing(lambda y: level - ell(BPLP, "L", y), 0.0, 1e5, 1e-9)
    assert excl_e2(BPLP, 10.0) == pytest.approx(oracle, rel=1e-4)
    assert excl_e2(BPLP, 10.0) == pytest.approx(123.3, abs=0.05)
    assert math.isinf(excl_e2(LAP, 7.0))


def test_e1_tight_minimality():
    eps = 1e-6
    for x in np.linspace(0.5, 200, 80):
        e1 = excl_e1(BPLP, x)
        if e1 > 0:
            assert ell(BPLP, "N", e1) <= ell(BPLP, "L", x) * (1 + 1e-12)
            assert ell(BPLP, "L", x) <= ell(BPLP, "N", e1 - eps)


def test_exclusion_ordering():
    for x in np.linspace(0.5, 200, 80):
        assert excl_e1(BPLP, x) < x
        assert excl_e2(BPLP, x) > x
    assert BPLP.exclusion("L", "L", 5.0) == 5.0
    assert BPLP.exclusion("N", "L", 10.0) == excl_e1(BPLP, 10.0)


def test_custom_matches_bplp():
    cu = PathLossSpec.custom(BPLP.ell_L, BPLP.ell_N)
    for x in (0.5, 3.0, 10.0, 120.0):
        assert cu.e1(x) == pytest.approx(BPLP.e1(x), rel=1e-6, abs=1e-9)
        assert cu.e2(x) == pytest.approx(BPLP.e2(x), rel=1e-6)


def test_custom_rejections():
    with pytest.raises(InvalidPathLoss):
        PathLossSpec.custom(lambda x: np.minimum(1.0, x), BPLP.ell_N)  # increasing
    with pytest.raises(InvalidPathLoss):
        PathLossSpec.custom(BPLP.ell_N, BPLP.ell_L)  # NLoS above LoS
    with np.errstate(divide="ignore"), pytest.raises(InvalidPathLoss):
        PathLossSpec.custom(lambda x: 1.0 / np.asarray(x), BPLP.ell_N)  # unbounded at 0
    with pytest.raises(InvalidPathLoss):
        PathLossSpec.bplp(C_L=1e-7, C_N=1e-6)


def _tail_oracle(C, k, s, a, m):
    # quadrature up to Y, then the leading terms of the series in s*C*y**-k
    mpmath.mp.dps = 30
    sc = s * C
    f = lambda y: y**m * sc * min(1, y ** (-k)) / (1 + sc * min(1, y ** (-k)))
    Y = mpmath.mpf(10) ** 9
    pts = [a] + ([1] if a < 1 else []) + [p for p in (1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8) if p > max(a, 1)] + [Y]
    body = mpmath.quad(f, pts)
    tail = sum((-1) ** (j + 1) * sc**j * Y ** (m + 1 - j * k) / (j * k - m - 1) for j in (1, 2, 3))
    return float(body + tail)


@pytest.mark.parametrize("state,s,a,m", [
    ("L", 1e9, 0.3, 0), ("L", 1e9, 50.0, 1), ("N", 3e10, 2.0, 1), ("L", 1e6, 0.0, 1), ("N", 1e12, 400.0, 0),
])
def test_interference_tail_closed_form(state, s, a, m):
    C, k = (BPLP.C_L, BPLP.alpha_L) if state == "L" else (BPLP.C_N, BPLP.alpha_N)
    got = BPLP.interference_tail(state, s, a, moment=m)
    assert got == pytest.approx(_tail_oracle(C, k, s, a, m), rel=1e-9)


def test_interference_tail_edge_cases():
    assert BPLP.interference_tail("L", 0.0, 1.0) == 0.0
    assert LAP.interference_tail("N", 1e9, 1.0) == 0.0
    assert BPLP.interference_tail("L", 1e9, math.inf) == 0.0
    with pytest.raises(InvalidPathLoss):
        PathLossSpec.bplp(alpha_L=1.5).interference_tail("L", 1e9, 1.0, moment=1)
