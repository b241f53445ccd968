"""Poisson Boolean segment blockages: marginal and pairwise LoS probabilities.

Two links leave the user at the origin, link 1 with length ``r1`` at angle
``theta`` and link 2 with length ``r2`` along the x-axis. A blockage is a
segment of length ``l`` and orientation ``delta``; it blocks a link when its
centre falls in a parallelogram of area ``l*r*|sin(delta - phi)|``. Both links
are LoS iff no centre falls in the union of the two parallelograms, whose
expected area (over blockage marks) is the quantity ``curly_n`` below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from numpy.polynomial import legendre

from .errors import InvalidGeometry
from .numerics import DEFAULT_QUAD, QuadSpec, integrate
from .pathloss import LinkState

__all__ = [
    "LengthDist",
    "OrientationDist",
    "BlockageModel",
    "Segment",
    "los_prob",
    "nlos_prob",
    "parallelogram_union_area",
    "f_prime",
    "curly_n",
    "joint_prob",
    "joint_prob_bounds",
    "segment_blocks_link",
    "segments_block_links",
    "joint_los_integral",
]

_THETA_FLOOR = 1e-9


@dataclass(frozen=True)
class LengthDist:
    """Blockage length law: ``uniform`` on (0, value) or ``deterministic`` at value."""

    kind: str = "uniform"
    value: float = 200.0

    def __post_init__(self):
        if self.kind not in ("uniform", "deterministic"):
            raise ValueError(f"unsupported length distribution {self.kind!r}")
        if not self.value > 0:
            raise ValueError("blockage length parameter must be > 0")

    @property
    def mean(self) -> float:
        return self.value / 2.0 if self.kind == "uniform" else self.value

    @property
    def max(self) -> float:
        return self.value

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(0.0, self.value, n)
        return np.full(n, self.value)


@dataclass(frozen=True)
class OrientationDist:
    """``uniform`` on (0, pi) or ``fixed`` at ``angle``."""

    kind: str = "uniform"
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "fixed"):
            raise ValueError(f"unsupported orientation distribution {self.kind!r}")
        if self.kind == "fixed" and not (0.0 <= self.angle < math.pi):
            raise ValueError("fixed orientation must lie in [0, pi)")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(0.0, math.pi, n)
        return np.full(n, self.angle)


@dataclass(frozen=True)
class BlockageModel:
    mu: float
    length: LengthDist = LengthDist()
    orientation: OrientationDist = OrientationDist()
    dimension: int = 2

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("blockage density must be >= 0")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")

    @property
    def beta(self) -> float:
        """Exponential LoS decay rate per metre."""
        if self.dimension == 1:
            return self.mu
        return 2.0 * self.mu * self.length.mean / math.pi

    @classmethod
    def from_beta(cls, beta: float, l_max: float) -> "BlockageModel":
        """2D model with Unif(0, l_max) lengths and density chosen to hit ``beta``."""
        length = LengthDist("uniform", l_max)
        return cls(math.pi * beta / (2.0 * length.mean), length)


@dataclass(frozen=True)
class Segment:
    center: tuple
    length: float
    orientation: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("segment length must be > 0")

    def endpoints(self):
        cx, cy = self.center
        dx = 0.5 * self.length * math.cos(self.orientation)
        dy = 0.5 * self.length * math.sin(self.orientation)
        return (cx - dx, cy - dy), (cx + dx, cy + dy)


# --------------------------------------------------------------------------

def los_prob(model: BlockageModel, r):
    return np.exp(-model.beta * np.asarray(r, dtype=float))


def nlos_prob(model: BlockageModel, r):
    return -np.expm1(-model.beta * np.asarray(r, dtype=float))


def parallelogram_union_area(r1, r2, theta, l, delta):
    """Area of the union of the two blocking parallelograms (vectorised).

    The overlap is a triangle of area ``l^2 sin(delta) sin(delta-theta) /
    (2 sin(theta))`` truncated where either link ends; the truncated part
    scales with ``min(1, r1 sin(theta)/(l sin(delta)), r2 sin(theta)/(l
    sin(delta-theta)))``.
    """
    r1, r2, theta, l, delta = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (r1, r2, theta, l, delta))
    )
    base = l * r1 * np.abs(np.sin(delta - theta)) + l * r2 * np.sin(delta)
    s = np.sin(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        sd = np.sin(delta)
        sdt = np.sin(delta - theta)
        frac = np.minimum.reduce(
            [np.ones_like(s), r1 * s / (l * sd), r2 * s / (l * sdt)]
        )
        tri = l * l * sd * sdt / (2.0 * s)
        overlap = tri * (1.0 - (1.0 - frac) ** 2)
    active = (delta > theta) & (l > 0) & (s > 0)
    area = base - np.where(active, overlap, 0.0)
    # theta -> 0: coincident rays, union is the longer parallelogram
    coincident = s <= 0
    if np.any(coincident):
        lim = np.where(theta < 1.0, l * np.maximum(r1, r2) * np.abs(np.sin(delta)), base)
        area = np.where(coincident, lim, area)
    area = np.where(l > 0, area, 0.0)
    return float(area) if area.ndim == 0 else area


@lru_cache(maxsize=None)
def _delta_rule(order: int):
    return legendre.leggauss(order)


def _expected_overlap_given_delta(length: LengthDist, a, gamma, s):
    """E_L of the truncated overlap for orientation-dependent ``a``, ``gamma``.

    ``a = sin(D) sin(D-theta)``, ``gamma = min(r1/sin D, r2/sin(D-theta))`` and
    the truncation length is ``alpha = s * gamma``; the overlap as a function
    of blockage length is ``a L^2/(2s)`` for ``L <= alpha`` and
    ``(a gamma / 2)(2 L - alpha)`` beyond.
    """
    alpha = s * gamma
    lm = length.value
    if length.kind == "deterministic":
        with np.errstate(divide="ignore", invalid="ignore"):
            short = a * lm * lm / (2.0 * s)
        long_ = 0.5 * a * gamma * (2.0 * lm - alpha)
        return np.where(lm <= alpha, short, long_)
    with np.errstate(divide="ignore", invalid="ignore"):
        short = a * lm * lm / (6.0 * s)
    long_ = 0.5 * a * gamma * (alpha * alpha / (3.0 * lm) + lm - alpha)
    return np.where(lm <= alpha, short, long_)


# Uniform orientations: on each orientation interval where the overlap keeps
# one branch (short/long blockage, link 1 or link 2 truncating) the integrand
# is a trigonometric rational with an elementary antiderivative.

@njit(cache=True)
def _antiderivative(D, th, s, c, r1, r2, lm, uniform, long_branch, first):
    if not long_branch:
        k = 6.0 * s if uniform else 2.0 * s
        return (0.5 * D * c - 0.25 * math.sin(2.0 * D - th)) * lm * lm / k
    if first:
        sd = math.sin(D)
        p1 = c * math.log(math.tan(0.5 * D)) + s / sd
        p2 = -math.cos(D - th)
        p3 = D * c - s * math.log(sd)
        r = r1
    else:
        e = D - th
        se = math.sin(e)
        p1 = c * math.log(math.tan(0.5 * e)) - s / se
        p2 = -math.cos(D)
        p3 = e * c + s * math.log(se)
        r = r2
    if uniform:
        return 0.5 * (r**3 * s * s / (3.0 * lm) * p1 + lm * r * p2 - r * r * s * p3)
    return lm * r * p2 - 0.5 * r * r * s * p3


@njit(cache=True)
def _fprime_scalar(r1, r2, theta, lm, uniform):
    pi = math.pi
    th = min(max(theta, _THETA_FLOOR), pi)
    if th >= pi:
        return 0.0
    s = math.sin(th)
    c = math.cos(th)
    a1 = math.asin(min(r1 * s / lm, 1.0))
    a2 = math.asin(min(r2 * s / lm, 1.0))
    cuts = np.empty(7)
    cuts[0] = th
    cuts[1] = pi
    cuts[2] = math.atan2(r1 * s, r1 * c - r2)
    cuts[3] = a1
    cuts[4] = pi - a1
    cuts[5] = th + a2
    cuts[6] = th + pi - a2
    for i in range(7):
        cuts[i] = min(max(cuts[i], th), pi)
    cuts.sort()
    total = 0.0
    for i in range(6):
        lo = cuts[i]
        hi = cuts[i + 1]
        # rounding can leave a sliver whose midpoint falls on th
        if hi - lo <= 1e-12:
            continue
        dm = 0.5 * (lo + hi)
        g1 = r1 / math.sin(dm)
        g2 = r2 / math.sin(dm - th)
        first = g1 <= g2
        long_branch = lm > s * min(g1, g2)
        total += _antiderivative(hi, th, s, c, r1, r2, lm, uniform, long_branch, first) - _antiderivative(
            lo, th, s, c, r1, r2, lm, uniform, long_branch, first
        )
    return max(total / pi, 0.0)


@njit(cache=True)
def _fprime_many(r1, r2, theta, lm, uniform):
    out = np.empty(r1.shape[0])
    for i in range(r1.shape[0]):
        out[i] = _fprime_scalar(r1[i], r2[i], theta[i], lm, uniform)
    return out


def f_prime(model: BlockageModel, r1, r2, theta):
    """Expected overlap of the two blocking parallelograms, E_{L,D}[...] >= 0.

    Exact: the blockage-length expectation and the orientation integral are
    both evaluated in closed form, piece by piece.
    """
    r1, r2, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, r2, theta)))
    length = model.length
    if model.orientation.kind == "fixed":
        th = np.clip(theta, _THETA_FLOOR, math.pi)
        s = np.sin(th)
        d = np.full_like(th, model.orientation.angle)
        a = np.sin(d) * np.sin(d - th)
        with np.errstate(divide="ignore", invalid="ignore"):
            gamma = np.minimum(r1 / np.sin(d), r2 / np.sin(d - th))
            val = np.where(d > th, _expected_overlap_given_delta(length, a, gamma, s), 0.0)
        val = np.nan_to_num(val)
        return float(val) if val.ndim == 0 else val
    flat = _fprime_many(
        np.ascontiguousarray(r1.ravel()), np.ascontiguousarray(r2.ravel()),
        np.ascontiguousarray(theta.ravel()), float(length.value), length.kind == "uniform",
    )
    out = flat.reshape(r1.shape)
    return float(out) if out.ndim == 0 else out


def _curly_n_direct(model: BlockageModel, r1: float, r2: float, theta: float, spec: QuadSpec) -> float:
    """E[A] by nested adaptive quadrature of the union area itself."""
    length = model.length

    def area_given_delta(dl: float) -> float:
        if length.kind == "deterministic":
            return parallelogram_union_area(r1, r2, theta, length.value, dl)
        s, sd, sdt = math.sin(theta), math.sin(dl), math.sin(dl - theta)
        kink = []
        if dl > theta and s > 0:
            kink = [min(r1 * s / sd, r2 * s / sdt)]
        f = lambda l: parallelogram_union_area(r1, r2, theta, l, dl)
        return integrate(f, 0.0, length.value, spec, points=kink) / length.value

    if model.orientation.kind == "fixed":
        return area_given_delta(model.orientation.angle)
    pts = [theta, math.atan2(r1 * math.sin(theta), r1 * math.cos(theta) - r2)]
    return integrate(area_given_delta, 0.0, math.pi, spec, points=pts) / math.pi


def curly_n(model: BlockageModel, r1, r2, theta, route: str = "fprime", spec: QuadSpec = DEFAULT_QUAD):
    """Expected union area ``E[A]`` (so that P(both LoS) = exp(-mu * curly_n)).

    ``route='fprime'`` uses ``(beta/mu)(r1+r2) - F'``; ``route='direct'``
    integrates the area formula (scalar inputs only).
    """
    if route == "direct":
        return _curly_n_direct(model, float(r1), float(r2), float(theta), spec)
    if route != "fprime":
        raise ValueError(f"unknown route {route!r}")
    per_mu = 2.0 * model.length.mean / math.pi
    out = per_mu * (np.asarray(r1, dtype=float) + np.asarray(r2, dtype=float)) - f_prime(model, r1, r2, theta)
    return float(out) if np.ndim(out) == 0 else out


def _p_ll(model: BlockageModel, r1, r2, theta):
    beta = model.beta
    return np.exp(-beta * (np.asarray(r1, float) + np.asarray(r2, float)) + model.mu * f_prime(model, r1, r2, theta))


def joint_prob(model: BlockageModel, s1, s2, r1, r2, theta):
    """P(link 1 in state ``s1`` and link 2 in state ``s2``)."""
    s1, s2 = LinkState.of(s1), LinkState.of(s2)
    pll = _p_ll(model, r1, r2, theta)
    p1 = los_prob(model, r1)
    p2 = los_prob(model, r2)
    if s1 is LinkState.L and s2 is LinkState.L:
        out = pll
    elif s1 is LinkState.L:
        out = p1 - pll
    elif s2 is LinkState.L:
        out = p2 - pll
    else:
        out = 1.0 - p1 - p2 + pll
    out = np.asarray(out, dtype=float)
    if np.any(out < -1e-9):
        raise InvalidGeometry(f"joint probability {out.min():.3e} < 0 for ({s1.value},{s2.value})")
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def joint_prob_bounds(model: BlockageModel, r1, r2, theta):
    """(independent-blocking lower, maximally-correlated upper) bounds on P(LL)."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    beta = model.beta
    lower = np.exp(-beta * (r1 + r2))
    upper = np.exp(-beta * (r1 + r2) + beta * np.minimum(r1, r2) * (1.0 + np.cos(theta)) / 2.0)
    if lower.ndim == 0 and np.ndim(upper) == 0:
        return float(lower), float(upper)
    return lower, upper


# --------------------------------------------------------------------------
# angular integral of the joint LoS probability

_THETA_ORDER = 24  # nodes per angular panel; two panels


@njit(cache=True)
def _jll_jit(r, t, mu, beta, lm, uniform, xt, wt):
    n = r.shape[0]
    out = np.empty(n)
    pi = math.pi
    for i in range(n):
        ri = r[i]
        ti = t[i]
        m = min(ri, ti)
        base = math.exp(-beta * (ri + ti))
        if m <= 0.0 or mu == 0.0:
            out[i] = 2.0 * pi * base
            continue
        # exp(mu F') peaks at theta = 0 with width ~ 1/(beta m)
        split = min(max(4.0 / (beta * m), 0.05), 0.5 * pi)
        acc = 0.0
        for p in range(2):
            lo = 0.0 if p == 0 else split
            hi = split if p == 0 else pi
            half = 0.5 * (hi - lo)
            mid = lo + half
            for k in range(xt.shape[0]):
                acc += half * wt[k] * math.exp(mu * _fprime_scalar(ri, ti, mid + half * xt[k], lm, uniform))
        out[i] = 2.0 * base * acc
    return out


def joint_los_integral(model: BlockageModel, r, t, mode: str = "correlated"):
    """J(r, t) = int_0^{2 pi} P(both links LoS) dtheta; vectorised, broadcasts.

    ``mode='independent'`` drops all correlation (J = 2 pi e^{-beta(r+t)});
    ``mode='maximal'`` uses the infinitely-long-blockage upper bound on P(LL).
    """
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    beta = model.beta
    base = 2.0 * math.pi * np.exp(-beta * (r + t))
    if mode == "independent" or model.mu == 0:
        out = base
    elif mode == "maximal":
        from .numerics import bessel_i

        h = 0.5 * beta * np.minimum(r, t)
        # e^{h} I0(h) e^{-beta(r+t)} with the scaled Bessel function
        out = base * np.exp(2.0 * h) * bessel_i(0, h, scaled=True)
    elif mode == "correlated":
        if model.orientation.kind == "uniform":
            xt, wt = _delta_rule(_THETA_ORDER)
            flat = _jll_jit(
                np.ascontiguousarray(r.ravel()), np.ascontiguousarray(t.ravel()), model.mu, beta,
                float(model.length.value), model.length.kind == "uniform", xt, wt,
            )
            out = flat.reshape(r.shape)
        else:
            xt, wt = _delta_rule(2 * _THETA_ORDER)
            th = 0.5 * math.pi * (xt + 1.0)
            fp = f_prime(model, r[..., None], t[..., None], th)
            out = base * math.pi * (np.exp(model.mu * fp) * wt).sum(axis=-1)
    else:
        raise ValueError(f"unknown correlation mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# exact segment/link predicate

def _orient(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def segments_block_links(p1, p2, bs, user=(0.0, 0.0)):
    """Vectorised proper-intersection test of segments ``p1p2`` with links ``user-bs``.

    All point arguments broadcast over leading axes with a final axis of 2.
    Collinear touching counts as not blocking (a measure-zero event).
    """
    p1, p2, bs, user = (np.asarray(v, dtype=float) for v in (p1, p2, bs, user))
    ux, uy = user[..., 0], user[..., 1]
    bx, by = bs[..., 0], bs[..., 1]
    ax, ay = p1[..., 0], p1[..., 1]
    cx, cy = p2[..., 0], p2[..., 1]
    d1 = _orient(ux, uy, bx, by, ax, ay)
    d2 = _orient(ux, uy, bx, by, cx, cy)
    d3 = _orient(ax, ay, cx, cy, ux, uy)
    d4 = _orient(ax, ay, cx, cy, bx, by)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def segment_blocks_link(seg: Segment, bs, user=(0.0, 0.0)) -> bool:
    """True iff ``seg`` crosses the open segment between ``user`` and ``bs``."""
    if tuple(bs) == tuple(user):
        raise ValueError("BS and user coincide")
    a, b = seg.endpoints()
    return bool(segments_block_links(a, b, bs, user))
