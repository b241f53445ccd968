"""2D analysis under first-order blocking correlation.

Only the correlation between the serving link and each interfering link is
kept; interferers are otherwise independent. All quantities then reduce to
the angular integral of the pairwise LoS probability

    J(r, t) = int_0^{2 pi} P(link at r and link at t both LoS | angle theta) dtheta

(:func:`blockcorr.blockage.joint_los_integral`), and the remaining pairwise
probabilities follow from it: J_LN(r, t) = 2 pi p_L(r) - J, J_NL = 2 pi
p_L(t) - J, J_NN = 2 pi - J_LN - J_NL - J.

Every function takes a ``mode``:

* ``'correlated'``: the model itself.
* ``'independent'``: per-link independent blocking (the IBA baseline).
* ``'maximal'``: infinitely long blockages, the most correlated case.

The three modes run through the same code, so the baselines differ from the
correlated result only through J.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .blockage import BlockageModel, joint_los_integral
from .errors import DegenerateCondition
from .numerics import PanelGrid, bessel_i, find_root_increasing, geometric_breaks
from .oned import BANDWIDTH_HZ, thermal_noise_w
from .pathloss import LinkState, PathLossKind, PathLossSpec

__all__ = [
    "NetworkParams2D",
    "BoundPair",
    "RateMode",
    "RateAllocation",
    "MODES",
    "g_2d",
    "big_g_2d",
    "assoc_prob_2d",
    "assoc_bounds_2d",
    "serving_pdf_2d",
    "g_2d_bounds",
    "lt_interference_2d",
    "coverage_2d",
    "coverage_2d_bounds",
    "g_lap_simple_bounds",
    "sin2_bound_constant",
    "rate_coverage_2d",
]

MODES = ("correlated", "independent", "maximal")

# improper integrals stop where the exponential envelope reaches exp(-_CUT)
_CUT = 36.0
_OUTER_ORDER = 10
_INNER_ORDER = 8
_L, _N = LinkState.L, LinkState.N


@dataclass(frozen=True)
class NetworkParams2D:
    """``lam``: BS density per m^2; ``user_density``: users per m^2 (rate only)."""

    lam: float
    blockage: BlockageModel
    pathloss: PathLossSpec = field(default_factory=PathLossSpec.bplp)
    noise_power: float = thermal_noise_w()
    bandwidth: float = BANDWIDTH_HZ
    user_density: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        if self.noise_power < 0:
            raise ValueError("noise_power must be >= 0")
        if self.blockage.dimension != 2:
            raise ValueError("2D analysis needs a 2D blockage model")

    @property
    def beta(self) -> float:
        return self.blockage.beta


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper * (1.0 + 1e-9) + 1e-15:
            raise ValueError(f"lower bound {self.lower!r} exceeds upper bound {self.upper!r}")

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


class RateMode(str, enum.Enum):
    EQUAL_ALL = "EqualAll"
    LOS_ONLY = "LoSOnly"


@dataclass(frozen=True)
class RateAllocation:
    mode: RateMode = RateMode.EQUAL_ALL
    # mean-load constant for the number of users per cell
    load_factor: float = 1.28

    def users_per_cell(self, params: NetworkParams2D, a_los: float = 1.0) -> float:
        share = params.user_density / params.lam
        if RateMode(self.mode) is RateMode.LOS_ONLY:
            share *= a_los
        return 1.0 + self.load_factor * share


# --------------------------------------------------------------------------
# integration ranges

def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def _iba_log_gl(params: NetworkParams2D, x):
    """-log of the independent-blocking LoS serving function (an upper bound for every mode)."""
    beta, lam, pl = params.beta, params.lam, params.pathloss
    x = np.asarray(x, dtype=float)
    e1 = pl.e1(x)
    if beta == 0:
        return lam * math.pi * x * x
    return beta * x + lam * math.pi * e1 * e1 + 2.0 * math.pi * lam / beta**2 * (_f1(beta, e1) - _f1(beta, x))


@lru_cache(maxsize=64)
def _radius_limit(params: NetworkParams2D) -> float:
    """Serving distance beyond which every serving-distance function is below e^-_CUT."""
    beta = params.beta
    hi = _CUT / beta if beta > 0 else math.inf
    void = math.sqrt(_CUT / (params.lam * math.pi))
    if not math.isfinite(hi):
        return void
    # the LoS bound decays like exp(-beta x) only once lambda*pi*x^2 saturates
    f = lambda x: float(_iba_log_gl(params, x)) - _CUT
    if f(hi) < 0:
        return hi
    return find_root_increasing(f, 0.0, hi, 1e-6 * hi)


def _span(params: NetworkParams2D) -> float:
    """Length over which e^{-beta t} decays to e^-_CUT."""
    return _CUT / params.beta if params.beta > 0 else math.inf


def _seg(a: float, b: float, scale: float, kinks) -> PanelGrid:
    first = max(0.25 * min(max(a, 1.0), scale), 0.05)
    return PanelGrid(geometric_breaks(a, b, first, 1.5, kinks), _INNER_ORDER)


def _outer(params: NetworkParams2D, upper: float, extra=()) -> PanelGrid:
    kinks = list(params.pathloss.kinks()) + [float(v) for v in extra]
    return PanelGrid(geometric_breaks(0.0, upper, 0.5, 1.35, kinks), _OUTER_ORDER)


def _f1(beta, z):
    z = np.asarray(z, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(z), 0.0, (1.0 + beta * z) * np.exp(-beta * np.where(np.isinf(z), 0.0, z)))
    return out


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


# --------------------------------------------------------------------------
# serving-distance functions

class _JBatch:
    """Collects (r, t) pairs, evaluates J once, hands slices back."""

    def __init__(self, model: BlockageModel, mode: str):
        self.model, self.mode = model, mode
        self._r, self._t, self._slices = [], [], []
        self._n = 0
        self.values = None

    def add(self, r: float, t: np.ndarray) -> int:
        self._r.append(np.full(t.shape, r))
        self._t.append(t)
        self._slices.append(slice(self._n, self._n + t.size))
        self._n += t.size
        return len(self._slices) - 1

    def run(self):
        if self._n:
            self.values = joint_los_integral(
                self.model, np.concatenate(self._r), np.concatenate(self._t), self.mode
            )
            self.values = np.atleast_1d(self.values)
        else:
            self.values = np.empty(0)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.values[self._slices[k]]


def _serving_terms(params: NetworkParams2D, xs: np.ndarray, mode: str, states=(_L, _N)):
    """g_L and g_N at every x in ``xs``."""
    pl, lam, beta = params.pathloss, params.lam, params.beta
    kinks = pl.kinks()
    scale = 1.0 / beta if beta > 0 else math.inf
    span = _span(params)
    batch = _JBatch(params.blockage, mode)
    jobs = []
    for x in xs:
        job = {}
        if _L in states:
            e1 = float(pl.e1(x))
            lo, hi = sorted((e1, x))
            if hi > lo:
                g = _seg(lo, hi, scale, kinks)
                job["los"] = (g, batch.add(x, g.nodes), 1.0 if x > e1 else -1.0)
        if _N in states and pl.nlos_possible and x > 0 and beta > 0:
            e2 = float(pl.e2(x))
            top = min(e2, x + span)
            if top > x:
                gn = _seg(x, top, scale, kinks)
                job["nl"] = (gn, batch.add(x, gn.nodes))
        jobs.append(job)
    batch.run()

    gl = np.zeros(len(xs))
    gn = np.zeros(len(xs))
    for i, (x, job) in enumerate(zip(xs, jobs)):
        pL = math.exp(-beta * x)
        if _L in states:
            # LoS BSs closer than x, NLoS ones closer than e1
            e1 = float(pl.e1(x))
            acc = math.pi * pL * e1 * e1
            if "los" in job:
                g, k, sign = job["los"]
                acc += sign * g.integral(batch[k] * g.nodes)
            gl[i] = pL * math.exp(-lam * acc / pL)
        if _N in states and pl.nlos_possible:
            pN = -math.expm1(-beta * x)
            if pN <= 0:
                continue
            acc = 0.0
            if "nl" in job:
                g, k = job["nl"]
                acc = g.integral((2.0 * math.pi * np.exp(-beta * g.nodes) - batch[k]) * g.nodes)
            gn[i] = pN * math.exp(-lam * math.pi * x * x - lam * acc / pN)
    return gl, gn


def g_2d(params: NetworkParams2D, state, x, mode: str = "correlated"):
    """P(a BS at distance x is LoS/NLoS and serves the user); vectorised in x."""
    _check_mode(mode)
    state = LinkState.of(state)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise ValueError("x must be >= 0")
    gl, gn = _serving_terms(params, xs, mode, (state,))
    out = gl if state is _L else gn
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))


def big_g_2d(params: NetworkParams2D, state, r, mode: str = "correlated"):
    """P(serving BS farther than r and in ``state``); vectorised in r."""
    _check_mode(mode)
    state = LinkState.of(state)
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rs < 0):
        raise ValueError("r must be >= 0")
    if state is _N and not params.pathloss.nlos_possible:
        out = np.zeros_like(rs)
        return float(out[0]) if np.ndim(r) == 0 else out
    upper = _radius_limit(params)
    grid = _outer(params, upper, [v for v in rs if 0 < v < upper])
    gl, gn = _serving_terms(params, grid.nodes, mode, (state,))
    vals = 2.0 * math.pi * params.lam * (gl if state is _L else gn) * grid.nodes
    total = grid.integral(vals)
    # suffix integral at each requested r: breaks include every r
    cum_at_break = np.concatenate([[0.0], np.cumsum(grid.integral_panels(vals))])
    idx = np.searchsorted(grid.breaks, rs)
    out = np.where(rs >= upper, 0.0, total - cum_at_break[np.minimum(idx, len(cum_at_break) - 1)])
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))


@lru_cache(maxsize=64)
def _assoc(params: NetworkParams2D, mode: str):
    grid = _outer(params, _radius_limit(params))
    gl, gn = _serving_terms(params, grid.nodes, mode)
    w = 2.0 * math.pi * params.lam * grid.nodes
    return float(grid.integral(gl * w)), float(grid.integral(gn * w))


def assoc_prob_2d(params: NetworkParams2D, state, mode: str = "correlated") -> float:
    _check_mode(mode)
    a_l, a_n = _assoc(params, mode)
    return a_l if LinkState.of(state) is _L else a_n


def assoc_bounds_2d(params: NetworkParams2D) -> BoundPair:
    """LoS association probability for maximally correlated vs independent blocking."""
    return BoundPair(assoc_prob_2d(params, _L, "maximal"), assoc_prob_2d(params, _L, "independent"))


def serving_pdf_2d(params: NetworkParams2D, state, x, mode: str = "correlated"):
    """Density of the serving distance given the serving BS is in ``state``."""
    a = assoc_prob_2d(params, state, mode)
    if a <= 0:
        raise DegenerateCondition(f"association probability of state {LinkState.of(state).value} is zero")
    x = np.asarray(x, dtype=float)
    return _out(2.0 * math.pi * params.lam * np.asarray(g_2d(params, state, x, mode)) * x / a)


# --------------------------------------------------------------------------
# closed-form bounds

def _big_f(beta: float, r):
    """r e^{-beta r/2} (beta r I0(beta r/2) + (beta r + 2) I1(beta r/2))."""
    r = np.asarray(r, dtype=float)
    h = 0.5 * beta * r
    return r * (beta * r * bessel_i(0, h, scaled=True) + (beta * r + 2.0) * bessel_i(1, h, scaled=True))


def g_2d_bounds(params: NetworkParams2D, state, x) -> BoundPair:
    """Closed-form bounds on g_state(x) from independent and maximally correlated blocking.

    For LoS serving, correlation lowers g, so the independent form is the upper
    bound. For NLoS serving correlation raises g and the roles swap.
    """
    state = LinkState.of(state)
    x = float(x)
    if x < 0:
        raise ValueError("x must be >= 0")
    pl, lam, beta = params.pathloss, params.lam, params.beta
    if beta == 0:
        v = float(np.exp(-_iba_log_gl(params, x))) if state is _L else 0.0
        return BoundPair(v, v)
    if state is _L:
        e1 = float(pl.e1(x))
        common = -beta * x - lam * math.pi * e1 * e1
        upper = math.exp(common - 2.0 * math.pi * lam / beta**2 * float(_f1(beta, e1) - _f1(beta, x)))
        lower = math.exp(common - 2.0 * math.pi * lam / (3.0 * beta) * float(_big_f(beta, x) - _big_f(beta, e1)))
        return BoundPair(lower, upper)
    if not pl.nlos_possible or x == 0:
        return BoundPair(0.0, 0.0)
    e2 = float(pl.e2(x))
    pN = -math.expm1(-beta * x)
    expo = 2.0 * math.pi * lam / beta**2 * float(_f1(beta, e2) - _f1(beta, x))
    h = 0.5 * beta * x
    shrink = (1.0 - float(bessel_i(0, h, scaled=True))) / pN
    iba = pN * math.exp(-lam * math.pi * x * x + expo)
    maximal = pN * math.exp(-lam * math.pi * x * x + expo * shrink)
    return BoundPair(iba, maximal)


_SIN2_CANDIDATES = (1.38, 1.0 / 1.38)
_SIN2_GRID = np.linspace(0.0, 0.5 * math.pi, 1000)
_SIN2_SLACK = 1e-4


def _sin2_violation(m: float) -> float:
    x = _SIN2_GRID
    s2 = np.sin(x) ** 2
    return float(max(np.max(1.0 + m * (x - 0.5 * math.pi) - s2), np.max(s2 - m * x)))


@lru_cache(maxsize=1)
def sin2_bound_constant() -> float:
    """Slope m with 1 + m(x - pi/2) <= sin^2 x <= m x on [0, pi/2].

    Candidates are checked on a 1000-point grid; the tightest one that holds
    (violation at most 1e-4) is used.
    """
    valid = [m for m in _SIN2_CANDIDATES if _sin2_violation(m) <= _SIN2_SLACK]
    if not valid:
        raise ValueError("no candidate slope satisfies the sin^2 sandwich")
    # smaller m gives the tighter upper line m x
    return min(valid)


def g_lap_simple_bounds(params: NetworkParams2D, r) -> BoundPair:
    """Elementary bounds (g1, g2) on the maximally correlated LoS serving function (LAP)."""
    if params.pathloss.kind is not PathLossKind.LAP:
        raise ValueError("simplified bounds assume the LoS-only path-loss model")
    r = float(r)
    if r < 0:
        raise ValueError("r must be >= 0")
    beta, lam = params.beta, params.lam
    m = sin2_bound_constant()
    k = 1.0 - m * math.pi / 2.0
    c = 4.0 * lam / (m * beta**2)
    g1 = math.exp(-beta * r - c / k * -math.expm1(-beta * r * k) + c * -math.expm1(-beta * r))
    g2 = math.exp(
        -beta * r - 4.0 * lam / (m * beta) ** 2 * (m * beta * r + 2.0 / math.pi * math.expm1(-m * beta * r * math.pi / 2.0))
    )
    return BoundPair(g1, g2)


# --------------------------------------------------------------------------
# interference

@dataclass
class _Kernel:
    """log LT = -lam * (c0 * tail_{v,1}(a0) + sum_j w_v(t_j) * coef_j)."""

    c0: float = 0.0
    a0: float = 0.0
    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    coef: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass
class _Node:
    r: float
    g: dict
    kernels: dict


def _build_nodes(params: NetworkParams2D, rs: np.ndarray, mode: str, with_n: np.ndarray) -> list:
    pl, beta = params.pathloss, params.beta
    kinks = pl.kinks()
    scale = 1.0 / beta if beta > 0 else math.inf
    span = _span(params)
    gl, gn = _serving_terms(params, rs, mode)
    batch = _JBatch(params.blockage, mode)
    plans = []
    for r, use_n in zip(rs, with_n):
        plan = {}
        e1 = float(pl.e1(r))
        if beta > 0:
            if r > e1 and pl.nlos_possible:
                g = _seg(e1, r, scale, kinks)
                plan["mid"] = (g, batch.add(r, g.nodes))
            g = _seg(r, r + span, scale, kinks)
            plan["los_far"] = (g, batch.add(r, g.nodes))
            if use_n and pl.nlos_possible:
                e2 = float(pl.e2(r))
                top = min(e2, r + span)
                if top > r:
                    g = _seg(r, top, scale, kinks)
                    plan["n_mid"] = (g, batch.add(r, g.nodes))
                if beta * e2 < _CUT + 10.0:
                    g = _seg(e2, e2 + span, scale, kinks)
                    plan["n_far"] = (g, batch.add(r, g.nodes))
        plans.append(plan)
    batch.run()

    nodes = []
    two_pi = 2.0 * math.pi
    for i, (r, plan) in enumerate(zip(rs, plans)):
        e1 = float(pl.e1(r))
        ks = {}
        if beta == 0:
            ks[(_L, _L)] = _Kernel(two_pi, r)
            ks[(_N, _L)] = _Kernel()
        else:
            pL = math.exp(-beta * r)
            g, k = plan["los_far"]
            far_coef = batch[k] / pL * g.nodes * g.weights
            ks[(_L, _L)] = _Kernel(0.0, r, g.nodes, far_coef)
            if pl.nlos_possible:
                ts, cs = [g.nodes], [-far_coef]
                if "mid" in plan:
                    gm, km = plan["mid"]
                    ts.append(gm.nodes)
                    cs.append(-batch[km] / pL * gm.nodes * gm.weights)
                ks[(_N, _L)] = _Kernel(two_pi, e1, np.concatenate(ts), np.concatenate(cs))
            else:
                ks[(_N, _L)] = _Kernel()
        if with_n[i] and pl.nlos_possible and beta > 0 and r > 0:
            pN = -math.expm1(-beta * r)
            e2 = float(pl.e2(r))
            ts_nn, cs_nn = [], []
            if "n_mid" in plan:
                g, k = plan["n_mid"]
                ts_nn.append(g.nodes)
                cs_nn.append((batch[k] - two_pi * np.exp(-beta * g.nodes)) / pN * g.nodes * g.weights)
            ln = _Kernel()
            if "n_far" in plan:
                g, k = plan["n_far"]
                jnl = (two_pi * np.exp(-beta * g.nodes) - batch[k]) / pN * g.nodes * g.weights
                ln = _Kernel(0.0, e2, g.nodes, jnl)
                if r + span > e2:
                    ts_nn.append(g.nodes)
                    cs_nn.append(-jnl)
            ks[(_L, _N)] = ln
            t_nn = np.concatenate(ts_nn) if ts_nn else np.empty(0)
            c_nn = np.concatenate(cs_nn) if cs_nn else np.empty(0)
            ks[(_N, _N)] = _Kernel(two_pi, r, t_nn, c_nn)
        nodes.append(_Node(float(r), {_L: gl[i], _N: gn[i]}, ks))
    return nodes


def _log_kappa(params: NetworkParams2D, kern: _Kernel, v: LinkState, nu: np.ndarray) -> np.ndarray:
    """-log LT for every interference scale ``nu`` (1/W)."""
    pl = params.pathloss
    out = np.zeros(nu.shape)
    if v is _N and not pl.nlos_possible:
        return out
    if kern.c0:
        out += kern.c0 * np.array([pl.interference_tail(v, float(n), kern.a0, moment=1) for n in nu])
    if kern.t.size:
        p = nu[:, None] * pl.ell(v, kern.t)[None, :]
        out += (p / (1.0 + p)) @ kern.coef
    return params.lam * out


def lt_interference_2d(params: NetworkParams2D, v, u, r: float, nu: float, mode: str = "correlated") -> float:
    """E[exp(-nu I_v) | serving BS of type u at distance r]."""
    _check_mode(mode)
    v, u = LinkState.of(v), LinkState.of(u)
    if nu < 0 or r < 0:
        raise ValueError("r and nu must be >= 0")
    if nu == 0 or (v is _N and not params.pathloss.nlos_possible):
        return 1.0
    if u is _N and not params.pathloss.nlos_possible:
        raise DegenerateCondition("no NLoS serving BS under the LoS-only path-loss model")
    node = _build_nodes(params, np.array([float(r)]), mode, np.array([u is _N]))[0]
    return float(math.exp(-_log_kappa(params, node.kernels[(v, u)], v, np.array([float(nu)]))[0]))


@dataclass
class _Plan:
    grid: PanelGrid
    nodes: list


@lru_cache(maxsize=16)
def _coverage_plan(params: NetworkParams2D, mode: str) -> _Plan:
    upper = _radius_limit(params)
    grid = _outer(params, upper)
    rs = grid.nodes
    with_n = params.lam * math.pi * rs * rs < _CUT + 4.0
    return _Plan(grid, _build_nodes(params, rs, mode, with_n))


def _coverage_branches(params: NetworkParams2D, taus: np.ndarray, mode: str):
    plan = _coverage_plan(params, mode)
    pl, noise = params.pathloss, params.noise_power
    acc = {_L: np.zeros((taus.size, len(plan.nodes))), _N: np.zeros((taus.size, len(plan.nodes)))}
    for j, node in enumerate(plan.nodes):
        for u in (_L, _N):
            g = node.g[u]
            if g <= 0 or (u, u) not in node.kernels:
                continue
            ell_u = float(pl.ell(u, node.r))
            nu = taus / ell_u
            log_k = _log_kappa(params, node.kernels[(_L, u)], _L, nu) + _log_kappa(
                params, node.kernels[(_N, u)], _N, nu
            )
            acc[u][:, j] = np.exp(-taus * noise / ell_u - log_k) * g
    w = 2.0 * math.pi * params.lam * plan.grid.nodes * plan.grid.weights
    return acc[_L] @ w, acc[_N] @ w


def coverage_2d(params: NetworkParams2D, tau, mode: str = "correlated", branches: bool = False):
    """P(SINR > tau), tau linear; vectorised in tau.

    ``branches=True`` returns the LoS- and NLoS-serving contributions
    separately.
    """
    _check_mode(mode)
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus < 0):
        raise ValueError("tau must be >= 0")
    p_l, p_n = _coverage_branches(params, taus, mode)
    if branches:
        if np.ndim(tau) == 0:
            return float(p_l[0]), float(p_n[0])
        return p_l, p_n
    out = np.clip(p_l + p_n, 0.0, 1.0)
    return float(out[0]) if np.ndim(tau) == 0 else out.reshape(np.shape(tau))


def coverage_2d_bounds(params: NetworkParams2D, tau):
    """(maximally correlated, independent) coverage for the LoS-only model."""
    if params.pathloss.kind is not PathLossKind.LAP:
        raise ValueError("coverage bounds are established for the LoS-only path-loss model")
    lo = coverage_2d(params, tau, "maximal")
    hi = coverage_2d(params, tau, "independent")
    if np.ndim(tau) == 0:
        return BoundPair(lo, hi)
    return [BoundPair(a, b) for a, b in zip(lo, hi)]


def rate_coverage_2d(params: NetworkParams2D, alloc: RateAllocation, rho, mode: str = "correlated"):
    """P(rate > rho) with mean-load bandwidth sharing; ``rho`` in bit/s."""
    rhos = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rhos < 0):
        raise ValueError("rho must be >= 0")
    los_only = RateMode(alloc.mode) is RateMode.LOS_ONLY
    a_l = assoc_prob_2d(params, _L, mode) if los_only else 1.0
    n_u = alloc.users_per_cell(params, a_l)
    taus = np.expm1(rhos * n_u / params.bandwidth * math.log(2.0))
    p_l, p_n = coverage_2d(params, taus, mode, branches=True)
    out = np.asarray(p_l) if los_only else np.clip(np.asarray(p_l) + np.asarray(p_n), 0.0, 1.0)
    return float(out[0]) if np.ndim(rho) == 0 else out.reshape(np.shape(rho))
