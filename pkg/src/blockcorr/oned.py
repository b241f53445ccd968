"""Exact analysis of a 1D (street) network with point blockages.

BSs form a PPP of density ``lam`` on the line, blockages a PPP of density
``mu``. The user at the origin sees a BS as LoS iff no blockage lies between
them, so with ``q``/``q'`` the nearest blockages on the right/left, the
blocking states of all links are fully determined by the pair ``(q, q')``.
Conditioning on that pair and averaging at the end keeps the analysis exact.

Rough map of the functions:

* ``g_cond_1d``: P(a BS at x is the serving BS in a given state | q, q').
* ``g_1d``: the same averaged over ``(q, q')`` in closed form.
* ``big_g_1d`` and ``assoc_prob_1d``: its tail integrals.
* ``lt_interference_cond_1d``: Laplace transform of the interference given
  the serving BS and ``(q, q')``.
* ``coverage_1d``: the SINR coverage probability, plus the
  independent-blocking (``*_iba``) baselines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import DEFAULT_QUAD, PanelGrid, QuadSpec, geometric_breaks, integrate
from .pathloss import LinkState, PathLossKind, PathLossSpec

__all__ = [
    "NetworkParams1D",
    "NearestBlockagePair",
    "g_cond_1d",
    "g_1d",
    "g_1d_bplp",
    "g_1d_iba",
    "big_g_1d",
    "big_g_1d_iba",
    "assoc_prob_1d",
    "assoc_prob_1d_iba",
    "lt_interference_cond_1d",
    "coverage_1d",
    "coverage_1d_iba",
]

NOISE_DBM_PER_HZ = -174.0
BANDWIDTH_HZ = 1e9


def thermal_noise_w(bandwidth_hz: float = BANDWIDTH_HZ, dbm_per_hz: float = NOISE_DBM_PER_HZ) -> float:
    return 10.0 ** ((dbm_per_hz - 30.0) / 10.0) * bandwidth_hz


@dataclass(frozen=True)
class NetworkParams1D:
    """``lam``: BS density per m, ``mu``: blockage density per m."""

    lam: float
    mu: float
    pathloss: PathLossSpec = field(default_factory=PathLossSpec.bplp)
    noise_power: float = thermal_noise_w()
    bandwidth: float = BANDWIDTH_HZ
    user_density: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.noise_power < 0:
            raise ValueError("noise_power must be >= 0")

    @property
    def beta(self) -> float:
        return self.mu


@dataclass(frozen=True)
class NearestBlockagePair:
    q: float
    q_prime: float

    def __post_init__(self):
        if self.q < 0 or self.q_prime < 0:
            raise ValueError("blockage distances must be >= 0")


# --------------------------------------------------------------------------
# serving-distance functions

def g_cond_1d(params: NetworkParams1D, state, x: float, q: float, q_prime: float) -> float:
    """P(BS at distance x serves in ``state`` | nearest blockages at q (right), q' (left))."""
    if min(x, q, q_prime) < 0:
        raise ValueError("x, q, q' must be >= 0")
    state = LinkState.of(state)
    lam, pl = params.lam, params.pathloss
    if state is LinkState.L:
        if not x < q:
            return 0.0
        e1 = pl.e1(x)
        if q_prime <= e1:
            return math.exp(-lam * x - lam * e1)
        if q_prime < x:
            return math.exp(-lam * x - lam * q_prime)
        return math.exp(-2.0 * lam * x)
    if not (x >= q) or not pl.nlos_possible:
        return 0.0
    if q_prime < x:
        return math.exp(-2.0 * lam * x)
    e2 = pl.e2(x)
    if q_prime < e2:
        return math.exp(-lam * x - lam * q_prime)
    return math.exp(-lam * x - lam * e2)


def _g_closed(lam, mu, x, e1, e2, state):
    s = lam + mu
    if state is LinkState.L:
        return (
            np.exp(-lam * (e1 + x) - mu * x) * -np.expm1(-mu * e1)
            + mu * np.exp(-s * x) / s * (np.exp(-s * e1) - np.exp(-s * x))
            + np.exp(-2.0 * s * x)
        )
    nl = -np.expm1(-mu * x)
    with np.errstate(invalid="ignore"):
        far = np.where(np.isinf(e2), 0.0, np.exp(-s * e2))
    return (
        mu * np.exp(-lam * x) / s * nl * (np.exp(-s * x) - far)
        + np.exp(-lam * x) * far * nl
        + np.exp(-2.0 * lam * x) * nl * nl
    )


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def g_1d(params: NetworkParams1D, state, x):
    """E_{q,q'}[g_cond_1d]; vectorised in ``x``."""
    state = LinkState.of(state)
    x = np.asarray(x, dtype=float)
    pl = params.pathloss
    if state is LinkState.N and not pl.nlos_possible:
        return _out(np.zeros_like(x))
    return _out(_g_closed(params.lam, params.mu, x, pl.e1(x), pl.e2(x), state))


def g_1d_bplp(params: NetworkParams1D, state, x):
    """Closed form with the BPLP exclusion radii written out piecewise."""
    pl = params.pathloss
    if pl.kind is not PathLossKind.BPLP:
        raise ValueError("g_1d_bplp needs a BPLP path-loss model")
    state = LinkState.of(state)
    x = np.asarray(x, dtype=float)
    lam, mu = params.lam, params.mu
    c, a = pl.c, pl.alpha
    s = lam + mu
    if state is LinkState.L:
        cx = c * np.power(x, a)
        far = (
            mu / s * np.exp(-s * x) * (np.exp(-s * cx) - np.exp(-s * x))
            + np.exp(-lam * (cx + x) - mu * x) * -np.expm1(-mu * cx)
            + np.exp(-2.0 * s * x)
        )
        near = mu / s * np.exp(-s * x) * -np.expm1(-s * x) + np.exp(-2.0 * s * x)
        return _out(np.where(x > c ** (-1.0 / a), far, near))
    e2 = np.where(x > 1.0, np.power(np.maximum(x, 1.0) / c, 1.0 / a), c ** (-1.0 / a))
    nl = -np.expm1(-mu * x)
    val = (
        mu * np.exp(-lam * x) / s * nl * (np.exp(-s * x) - np.exp(-s * e2))
        + np.exp(-lam * x) * np.exp(-s * e2) * nl
        + np.exp(-2.0 * lam * x) * nl * nl
    )
    return _out(val)


def g_1d_iba(params: NetworkParams1D, state, x):
    """Serving-distance function when every link is blocked independently w.p. 1-e^{-mu r}."""
    state = LinkState.of(state)
    x = np.asarray(x, dtype=float)
    lam, mu, pl = params.lam, params.mu, params.pathloss
    if state is LinkState.N and not pl.nlos_possible:
        return _out(np.zeros_like(x))
    if mu == 0:
        if state is LinkState.N:
            return _out(np.zeros_like(x))
        return _out(np.exp(-2.0 * lam * x))
    k = 2.0 * lam / mu
    if state is LinkState.L:
        e1 = pl.e1(x)
        return _out(np.exp(-mu * x + k * (np.expm1(-mu * x) - np.expm1(-mu * e1)) - 2.0 * lam * e1))
    e2 = pl.e2(x)
    tail = np.where(np.isinf(e2), -1.0, np.expm1(-mu * e2))
    return _out(-np.expm1(-mu * x) * np.exp(k * (tail - np.expm1(-mu * x)) - 2.0 * lam * x))


def _tail_prob(gfun, params: NetworkParams1D, state, r: float, spec: QuadSpec) -> float:
    if r < 0:
        raise ValueError("r must be >= 0")
    state = LinkState.of(state)
    if state is LinkState.N and not params.pathloss.nlos_possible:
        return 0.0
    f = lambda x: float(gfun(params, state, x))
    rate = params.lam
    upper = r + spec.tail_cutoff_exponent / rate
    pts = [p for p in params.pathloss.kinks() if r < p < upper]
    return 2.0 * params.lam * integrate(f, r, upper, spec, points=pts)


_ASSOC_QUAD = QuadSpec(rel_tol=1e-11, abs_tol=1e-14, tail_cutoff_exponent=40.0)


def big_g_1d(params: NetworkParams1D, state, r: float, spec: QuadSpec = _ASSOC_QUAD) -> float:
    """P(serving BS farther than r and in ``state``)."""
    return _tail_prob(g_1d, params, state, r, spec)


def big_g_1d_iba(params: NetworkParams1D, state, r: float, spec: QuadSpec = _ASSOC_QUAD) -> float:
    return _tail_prob(g_1d_iba, params, state, r, spec)


def assoc_prob_1d(params: NetworkParams1D, state) -> float:
    state = LinkState.of(state)
    pl = params.pathloss
    if pl.kind is PathLossKind.LAP:
        if state is LinkState.N:
            return 0.0
        if params.mu == 0:
            return 1.0
        rho = params.lam / params.mu
        return rho * (2.0 + rho) / (1.0 + rho) ** 2
    return big_g_1d(params, state, 0.0)


def assoc_prob_1d_iba(params: NetworkParams1D, state) -> float:
    state = LinkState.of(state)
    if params.pathloss.kind is PathLossKind.LAP:
        if state is LinkState.N:
            return 0.0
        if params.mu == 0:
            return 1.0
        return -math.expm1(-2.0 * params.lam / params.mu)
    return big_g_1d_iba(params, state, 0.0)


# --------------------------------------------------------------------------
# interference

def _w(pl: PathLossSpec, state, s: float):
    """y -> 1 / (1 + 1/(s*ell_state(y))), the Rayleigh-fading interference kernel."""
    def f(y):
        v = s * pl.ell(state, y)
        return v / (1.0 + v)
    return f


def _tail_integral(pl: PathLossSpec, state, s: float, a: float, b: float, spec: QuadSpec) -> float:
    """Integral of the interference kernel over [a, b] (b may be inf)."""
    if not b > a or s == 0:
        return 0.0
    if state is LinkState.N and not pl.nlos_possible:
        return 0.0
    if math.isinf(b):
        return pl.interference_tail(state, s, a)
    f = _w(pl, state, s)
    pts = [p for p in pl.kinks() if a < p]
    return integrate(lambda y: float(f(y)), a, b, spec, points=pts)


def lt_interference_cond_1d(
    params: NetworkParams1D, state, x: float, q: float, q_prime: float, s: float, spec: QuadSpec = DEFAULT_QUAD
) -> float:
    """Laplace transform E[exp(-s I) | serving BS at x in ``state``, q, q'].

    The right half-line beyond the serving BS contributes LoS interferers on
    (x, q) and NLoS ones beyond q; the left half-line contributes LoS
    interferers before q' and NLoS ones after it, each outside the exclusion
    radius implied by the serving BS.
    """
    state = LinkState.of(state)
    if s < 0:
        raise ValueError("s must be >= 0")
    if state is LinkState.L and not x < q:
        raise ValueError("LoS serving BS needs x < q")
    if state is LinkState.N and not x >= q:
        raise ValueError("NLoS serving BS needs x >= q")
    if s == 0:
        return 1.0
    pl = params.pathloss
    L, N = LinkState.L, LinkState.N
    if state is L:
        e1 = pl.e1(x)
        total = (
            _tail_integral(pl, N, s, q, math.inf, spec)
            + _tail_integral(pl, N, s, max(e1, q_prime), math.inf, spec)
            + _tail_integral(pl, L, s, x, q, spec)
            + _tail_integral(pl, L, s, x, max(x, q_prime), spec)
        )
    else:
        e2 = pl.e2(x)
        total = (
            _tail_integral(pl, N, s, x, math.inf, spec)
            + _tail_integral(pl, N, s, max(x, q_prime), math.inf, spec)
            + _tail_integral(pl, L, s, e2, max(e2, q_prime), spec)
        )
    return math.exp(-params.lam * total)


# --------------------------------------------------------------------------
# coverage

_GRID_ORDER = 12


class _Kernel:
    """Interference kernel for one serving power level, with cached tails."""

    def __init__(self, pl: PathLossSpec, state, s: float, spec: QuadSpec):
        self.pl, self.state, self.s, self.spec = pl, LinkState.of(state), s, spec
        self.active = s > 0 and (self.state is LinkState.L or pl.nlos_possible)

    def __call__(self, y):
        if not self.active:
            return np.zeros_like(np.asarray(y, dtype=float))
        v = self.s * self.pl.ell(self.state, y)
        return v / (1.0 + v)

    def tail(self, a: float) -> float:
        if not self.active or math.isinf(a):
            return 0.0
        return self.pl.interference_tail(self.state, self.s, a)


def _grid(a: float, b: float, scale: float, kinks) -> PanelGrid:
    first = max(0.25 * min(max(a, 1.0), scale), 1e-3)
    return PanelGrid(geometric_breaks(a, b, first, 1.6, kinks), _GRID_ORDER)


def _suffix(grid: PanelGrid, vals: np.ndarray, tail: float) -> np.ndarray:
    """Integral from each node to infinity, given the integral beyond grid.upper."""
    cum = grid.cumulative(vals)
    return tail + grid.integral(vals) - cum


def _lbranch_integrand(params: NetworkParams1D, x: float, tau: float, spec: QuadSpec) -> float:
    pl, lam, mu = params.pathloss, params.lam, params.mu
    ell_x = float(pl.ell_L(x))
    s = tau / ell_x
    wl = _Kernel(pl, LinkState.L, s, spec)
    wn = _Kernel(pl, LinkState.N, s, spec)
    kinks = pl.kinks()
    cut = spec.tail_cutoff_exponent
    e1 = float(pl.e1(x))

    # right half-line and the far-left factor share R(x)
    if mu > 0:
        top = x + cut / mu
        gq = _grid(x, top, 1.0 / mu, kinks)
        q = gq.nodes
        wn_q = _suffix(gq, wn(q), wn.tail(top))
        wl_xq = gq.cumulative(wl(q))
        R = gq.integral(mu * np.exp(-mu * q - lam * (wn_q + wl_xq)))
        wn_x = wn.tail(top) + gq.integral(wn(q))
    else:
        R = 0.0
        wn_x = wn.tail(x)
    # no blockage anywhere on the right: all LoS
    left = 0.0
    if mu > 0:
        if x > e1:
            gp = _grid(e1, x, 1.0 / mu, kinks)
            qp = gp.nodes
            wn_qp = _suffix(gp, wn(qp), wn_x)
            left += gp.integral(mu * np.exp(-(lam + mu) * qp - lam * wn_qp))
            wn_e1 = wn_x + gp.integral(wn(qp))
        else:
            wn_e1 = wn_x
        left += -math.expm1(-mu * e1) * math.exp(-lam * e1 - lam * wn_e1)
        left += math.exp(-lam * x) * R
        return math.exp(-lam * x) * R * left
    # mu == 0: every BS is LoS
    wl_all = wl.tail(x)
    return math.exp(-2.0 * lam * x - 2.0 * lam * wl_all)


def _nbranch_integrand(params: NetworkParams1D, x: float, tau: float, spec: QuadSpec) -> float:
    pl, lam, mu = params.pathloss, params.lam, params.mu
    if mu == 0 or not pl.nlos_possible:
        return 0.0
    ell_x = float(pl.ell_N(x))
    if ell_x <= 0:
        return 0.0
    s = tau / ell_x
    wl = _Kernel(pl, LinkState.L, s, spec)
    wn = _Kernel(pl, LinkState.N, s, spec)
    kinks = pl.kinks()
    cut = spec.tail_cutoff_exponent
    e2 = float(pl.e2(x))
    nl = -math.expm1(-mu * x)

    reach = x + cut / (lam + mu)
    mid_end = min(e2, reach)
    if mid_end > x:
        gp = _grid(x, mid_end, 1.0 / (lam + mu), kinks)
        qp = gp.nodes
        end_tail = wn.tail(mid_end)
        wn_qp = _suffix(gp, wn(qp), end_tail)
        mid = gp.integral(mu * np.exp(-(mu + lam) * qp - lam * wn_qp))
        wn_x = end_tail + gp.integral(wn(qp))
    else:
        mid = 0.0
        wn_x = wn.tail(x)
    far = 0.0
    if e2 < reach:
        top = e2 + cut / mu
        gf = _grid(e2, top, 1.0 / mu, kinks)
        qf = gf.nodes
        wn_qf = _suffix(gf, wn(qf), wn.tail(top))
        wl_qf = gf.cumulative(wl(qf))
        far = math.exp(-lam * e2) * gf.integral(mu * np.exp(-mu * qf - lam * (wn_qf + wl_qf)))
    near = nl * math.exp(-lam * x - lam * wn_x)
    return math.exp(-lam * x) * nl * math.exp(-lam * wn_x) * (near + mid + far)


def _outer_grid(a: float, b: float, kinks) -> PanelGrid:
    return PanelGrid(geometric_breaks(a, b, 0.25, 1.25, kinks), _GRID_ORDER)


def coverage_1d(params: NetworkParams1D, tau: float, spec: QuadSpec = DEFAULT_QUAD, branches: bool = False):
    """P(SINR > tau) with exact blockage correlation; ``tau`` is linear.

    With ``branches=True`` returns ``(p_L, p_N)``, the contributions of a
    LoS and an NLoS serving BS.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    pl, lam, mu = params.pathloss, params.lam, params.mu
    noise = params.noise_power
    cut = spec.tail_cutoff_exponent
    kinks = pl.kinks()

    gx = _outer_grid(0.0, cut / (lam + mu), kinks)
    xs = gx.nodes
    fl = np.array([_lbranch_integrand(params, x, tau, spec) for x in xs])
    fl *= np.exp(-tau * noise / pl.ell_L(xs))
    p_l = 2.0 * lam * gx.integral(fl)

    p_n = 0.0
    if pl.nlos_possible and mu > 0:
        gn = _outer_grid(0.0, cut / (2.0 * lam), kinks)
        xn = gn.nodes
        fn = np.array([_nbranch_integrand(params, x, tau, spec) for x in xn])
        with np.errstate(divide="ignore", over="ignore"):
            fn *= np.exp(-tau * noise / pl.ell_N(xn))
        p_n = 2.0 * lam * gn.integral(fn)
    if branches:
        return float(p_l), float(p_n)
    return float(min(max(p_l + p_n, 0.0), 1.0))


def coverage_1d_iba(params: NetworkParams1D, tau: float, spec: QuadSpec = DEFAULT_QUAD, branches: bool = False):
    """Coverage when each link is LoS independently with probability e^{-mu r}."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    pl, lam, mu = params.pathloss, params.lam, params.mu
    noise = params.noise_power
    cut = spec.tail_cutoff_exponent
    kinks = pl.kinks()
    L, N = LinkState.L, LinkState.N

    def kappa(serving, x):
        s = tau / float(pl.ell(serving, x))
        total = 0.0
        for v, p in ((L, lambda y: np.exp(-mu * y)), (N, lambda y: -np.expm1(-mu * y))):
            w = _Kernel(pl, v, s, spec)
            if not w.active:
                continue
            a = float(pl.exclusion(v, serving, x))
            if math.isinf(a):
                continue
            if mu == 0:
                total += w.tail(a) if v is L else 0.0
                continue
            top = a + cut / mu
            g = _grid(a, top, 1.0 / mu, kinks)
            total += g.integral(w(g.nodes) * p(g.nodes))
            # beyond top the NLoS probability is 1 to double precision
            if v is N:
                total += w.tail(top)
        return math.exp(-2.0 * lam * total)

    out = []
    for serving, rate in ((L, lam + mu), (N, 2.0 * lam)):
        if serving is N and (not pl.nlos_possible or mu == 0):
            out.append(0.0)
            continue
        g = _outer_grid(0.0, cut / rate, kinks)
        xs = g.nodes
        vals = np.array([kappa(serving, x) for x in xs]) * g_1d_iba(params, serving, xs)
        with np.errstate(divide="ignore", over="ignore"):
            vals *= np.exp(-tau * noise / pl.ell(serving, xs))
        out.append(2.0 * lam * float(g.integral(vals)))
    if branches:
        return tuple(out)
    return float(min(max(sum(out), 0.0), 1.0))
