"""Seeded Monte Carlo ground truth for the 1D and 2D blockage models.

A scene is a Poisson field of BSs around a user at the origin together with
a Boolean blockage process (points on the line in 1D, random segments in
2D). LoS is resolved exactly from the geometry and the user attaches to the
BS with the largest fading-averaged received power.

Scene ``i`` draws from ``numpy.random.default_rng([seed, i])``, so results
do not depend on scheduling or worker count. Per-scene values are written
into arrays indexed by scene and reduced at the end.

Coverage-type estimators average the fading analytically given the geometry
(conditional Monte Carlo). The Exp(1) fading draws stored in each scene are
used by :func:`resolve_sinr` and by ``fading_average=False``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numba
import numpy as np

from .errors import InsufficientSamples, NoServer
from .numerics import integrate
from .oned import NetworkParams1D
from .pathloss import LinkState
from .twod import NetworkParams2D, RateAllocation, RateMode

__all__ = [
    "SimConfig",
    "SimScene",
    "SinrResult",
    "EstimateWithCI",
    "Coverage",
    "RateCoverage",
    "BigG",
    "Assoc",
    "JointLos",
    "ServingG",
    "generate_scene",
    "resolve_sinr",
    "estimate_curve",
    "estimate_conditioned",
    "interference_lt",
    "default_workers",
    "dump_scene",
]

Params = Union[NetworkParams1D, NetworkParams2D]

# share of the noise power that interferers outside the window may add
_TRUNCATION_SHARE = 1e-3
_MIN_ACCEPTED = 500
_CHUNK = 256


def default_workers() -> int:
    raw = os.environ.get("BLOCKCORR_WORKERS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"BLOCKCORR_WORKERS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError("BLOCKCORR_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# configuration

def _spacing(params: Params) -> float:
    return 1.0 / params.lam if isinstance(params, NetworkParams1D) else 1.0 / math.sqrt(params.lam)


def _outside_interference(params: Params, radius: float) -> float:
    """Mean interference from BSs beyond ``radius`` if every one of them were LoS."""
    pl = params.pathloss
    if isinstance(params, NetworkParams1D):
        dens = lambda t: 2.0 * params.lam
    else:
        dens = lambda t: 2.0 * math.pi * params.lam * t
    beta = params.beta
    f = lambda t: dens(t) * (float(pl.ell_L(t)) * math.exp(-beta * t) + float(pl.ell_N(t)))
    return integrate(f, radius, math.inf)


def _auto_window(params: Params) -> float:
    r = 10.0 * _spacing(params)
    if params.noise_power > 0:
        budget = _TRUNCATION_SHARE * params.noise_power
        while _outside_interference(params, r) > budget and r < 1e7:
            r *= 1.25
    return r


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo set-up; ``window_radius``/``guard_radius`` default to safe values."""

    params: Params
    n_scenes: int = 10_000
    rng_seed: int = 0
    window_radius: Optional[float] = None
    guard_radius: Optional[float] = None

    def __post_init__(self):
        if self.n_scenes < 1:
            raise ValueError("n_scenes must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")
        if self.window_radius is None:
            object.__setattr__(self, "window_radius", _auto_window(self.params))
        if self.guard_radius is None:
            object.__setattr__(self, "guard_radius", self._max_length())
        if self.window_radius < 10.0 * _spacing(self.params) * (1 - 1e-12):
            raise ValueError("window_radius must be at least 10 mean BS spacings")
        if self.guard_radius < self._max_length():
            raise ValueError("guard_radius must be at least the maximum blockage length")

    @property
    def dimension(self) -> int:
        return 1 if isinstance(self.params, NetworkParams1D) else 2

    def _max_length(self) -> float:
        if self.dimension == 1:
            return 0.0
        return self.params.blockage.length.max

    def with_(self, **kw) -> "SimConfig":
        d = dict(params=self.params, n_scenes=self.n_scenes, rng_seed=self.rng_seed,
                 window_radius=self.window_radius, guard_radius=self.guard_radius)
        d.update(kw)
        return SimConfig(**d)


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    std_error: float
    n: int

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "EstimateWithCI":
        x = np.asarray(x, dtype=float)
        n = x.size
        if n == 0:
            raise InsufficientSamples("no samples")
        se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return cls(float(np.sum(x) / n), se, n)

    def within(self, value: float, k: float = 3.0, floor: float = 0.0) -> bool:
        return abs(value - self.mean) <= max(k * self.std_error, floor)


# --------------------------------------------------------------------------
# scenes

@dataclass
class SimScene:
    """BS positions (n,) in 1D or (n, 2) in 2D; blockages as points or (m, 4) endpoint rows."""

    bs_points: np.ndarray
    blockages: np.ndarray
    los_flags: np.ndarray
    fading: np.ndarray
    serving_index: Optional[int] = None

    @property
    def distances(self) -> np.ndarray:
        if self.bs_points.ndim == 1:
            return np.abs(self.bs_points)
        return np.hypot(self.bs_points[:, 0], self.bs_points[:, 1])


@numba.njit(cache=True, nogil=True)
def _blocked(ax, ay, bx, by, px, py):
    # proper crossing of segment a-b with link origin-p
    d1 = px * ay - py * ax
    d2 = px * by - py * bx
    if d1 * d2 >= 0.0:
        return False
    ex, ey = bx - ax, by - ay
    d3 = ex * (-ay) - ey * (-ax)
    d4 = ex * (py - ay) - ey * (px - ax)
    return d3 * d4 < 0.0


@numba.njit(cache=True, nogil=True)
def _los_kernel(seg, pts, n_bins):
    """LoS flag of every point in ``pts`` (origin links) against segments ``seg``."""
    two_pi = 2.0 * math.pi
    width = two_pi / n_bins
    ns = seg.shape[0]
    lo_bin = np.empty(ns, np.int64)
    n_cov = np.empty(ns, np.int64)
    counts = np.zeros(n_bins + 1, np.int64)
    for k in range(ns):
        pa = math.atan2(seg[k, 1], seg[k, 0])
        pb = math.atan2(seg[k, 3], seg[k, 2])
        d = pb - pa
        if d > math.pi:
            d -= two_pi
        elif d < -math.pi:
            d += two_pi
        start = pa if d >= 0.0 else pb
        span = abs(d)
        b0 = int(math.floor((start + math.pi) / width))
        b1 = int(math.floor((start + span + math.pi) / width))
        m = min(b1 - b0 + 1, n_bins)
        lo_bin[k] = b0
        n_cov[k] = m
        for j in range(m):
            counts[(b0 + j) % n_bins + 1] += 1
    for i in range(n_bins):
        counts[i + 1] += counts[i]
    fill = counts[:-1].copy()
    members = np.empty(counts[-1], np.int64)
    for k in range(ns):
        for j in range(n_cov[k]):
            b = (lo_bin[k] + j) % n_bins
            members[fill[b]] = k
            fill[b] += 1
    npnt = pts.shape[0]
    out = np.ones(npnt, np.bool_)
    for i in range(npnt):
        px, py = pts[i, 0], pts[i, 1]
        b = int(math.floor((math.atan2(py, px) + math.pi) / width)) % n_bins
        for q in range(counts[b], counts[b + 1]):
            k = members[q]
            if _blocked(seg[k, 0], seg[k, 1], seg[k, 2], seg[k, 3], px, py):
                out[i] = False
                break
    return out


def los_flags_2d(segments: np.ndarray, points: np.ndarray, n_bins: int = 128) -> np.ndarray:
    """Exact LoS of links origin->point given blockage segments (rows x1, y1, x2, y2)."""
    segments = np.ascontiguousarray(segments, dtype=float).reshape(-1, 4)
    points = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        return np.zeros(0, bool)
    if segments.shape[0] == 0:
        return np.ones(points.shape[0], bool)
    return _los_kernel(segments, points, n_bins)


def los_flags_1d(blockages: np.ndarray, points: np.ndarray) -> np.ndarray:
    """A BS is LoS iff no blockage point lies strictly between it and the origin."""
    b = np.asarray(blockages, dtype=float)
    right = b[b > 0].min() if np.any(b > 0) else math.inf
    left = -b[b < 0].max() if np.any(b < 0) else math.inf
    p = np.asarray(points, dtype=float)
    return np.where(p >= 0, p < right, -p < left)


def _disk(rng: np.random.Generator, radius: float, n: int) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _segments(rng: np.random.Generator, blockage, radius: float) -> np.ndarray:
    n = rng.poisson(blockage.mu * math.pi * radius * radius)
    centres = _disk(rng, radius, n)
    half = 0.5 * blockage.length.sample(rng, n)
    ang = blockage.orientation.sample(rng, n)
    dx, dy = half * np.cos(ang), half * np.sin(ang)
    return np.column_stack([centres[:, 0] - dx, centres[:, 1] - dy, centres[:, 0] + dx, centres[:, 1] + dy])


def _rng(cfg: SimConfig, index: int, stream: int = 0) -> np.random.Generator:
    key = [cfg.rng_seed, int(index)] if stream == 0 else [cfg.rng_seed, int(index), stream]
    return np.random.default_rng(key)


def generate_scene(cfg: SimConfig, scene_index: int, forced: Optional[Sequence[float]] = None) -> SimScene:
    """Scene ``scene_index`` of ``cfg``; deterministic in (seed, index).

    ``forced`` adds a BS at the given location (a position on the line in
    1D, a 2-vector in 2D) as index 0, for Palm-type estimates.
    """
    rng = _rng(cfg, scene_index)
    p, R = cfg.params, cfg.window_radius
    if cfg.dimension == 1:
        n_bs = rng.poisson(2.0 * p.lam * R)
        bs = rng.uniform(-R, R, n_bs)
        n_bl = rng.poisson(2.0 * p.mu * R)
        blk = rng.uniform(-R, R, n_bl)
        if forced is not None:
            bs = np.concatenate([[float(np.ravel(forced)[0])], bs])
        los = los_flags_1d(blk, bs)
    else:
        n_bs = rng.poisson(p.lam * math.pi * R * R)
        bs = _disk(rng, R, n_bs)
        blk = _segments(rng, p.blockage, R + cfg.guard_radius)
        if forced is not None:
            bs = np.vstack([np.asarray(forced, dtype=float).reshape(1, 2), bs])
        los = los_flags_2d(blk, bs)
    fading = rng.exponential(1.0, len(bs))
    scene = SimScene(bs, blk, los, fading)
    scene.serving_index = _serving(scene, p)
    return scene


def _powers(scene: SimScene, params: Params) -> np.ndarray:
    d = scene.distances
    pl = params.pathloss
    return np.where(scene.los_flags, pl.ell_L(d), pl.ell_N(d)) if d.size else np.zeros(0)


def _serving(scene: SimScene, params: Params) -> Optional[int]:
    pw = _powers(scene, params)
    if pw.size == 0 or not np.any(pw > 0):
        return None
    # highest mean power, then nearer, then lower index
    order = np.lexsort((np.arange(pw.size), scene.distances, -pw))
    return int(order[0])


@dataclass(frozen=True)
class SinrResult:
    sinr: float
    serving_state: LinkState
    serving_distance: float
    serving_index: int


def resolve_sinr(scene: SimScene, params: Params) -> SinrResult:
    """Instantaneous SINR with the scene's fading draws."""
    idx = scene.serving_index if scene.serving_index is not None else _serving(scene, params)
    if idx is None:
        raise NoServer("no BS has positive received power")
    pw = _powers(scene, params) * scene.fading
    s = pw[idx]
    interference = float(np.sum(pw)) - s
    state = LinkState.L if scene.los_flags[idx] else LinkState.N
    return SinrResult(float(s / (params.noise_power + interference)), state, float(scene.distances[idx]), idx)


def dump_scene(scene: SimScene) -> str:
    """Text record of a scene.

    Grammar, one item per line::

        scene <n_bs> <n_blockages> <serving_index|->
        bs <x> [<y>] <L|N> <fading>
        blk <x>               (1D)
        blk <x1> <y1> <x2> <y2>   (2D)
    """
    lines = [f"scene {len(scene.bs_points)} {len(scene.blockages)} "
             f"{'-' if scene.serving_index is None else scene.serving_index}"]
    for pt, los, h in zip(scene.bs_points, scene.los_flags, scene.fading):
        coords = " ".join(repr(float(v)) for v in np.atleast_1d(pt))
        lines.append(f"bs {coords} {'L' if los else 'N'} {float(h)!r}")
    for b in scene.blockages:
        lines.append("blk " + " ".join(repr(float(v)) for v in np.atleast_1d(b)))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class Coverage:
    """P(SINR > tau) for linear thresholds ``taus``."""

    taus: tuple
    fading_average: bool = True


@dataclass(frozen=True)
class RateCoverage:
    """P(rate > rho) under mean-load bandwidth sharing; ``rhos`` in bit/s."""

    rhos: tuple
    alloc: RateAllocation = RateAllocation()


@dataclass(frozen=True)
class BigG:
    """P(serving BS in ``state`` and farther than r)."""

    state: str
    rs: tuple


@dataclass(frozen=True)
class Assoc:
    state: str


@dataclass(frozen=True)
class JointLos:
    """Joint LoS of two links (r1, 0) and (r2, theta); 2D only. Single links use r2 = 0."""

    points: tuple


@dataclass(frozen=True)
class ServingG:
    """P(a BS forced at distance x is in ``state`` and serves the user)."""

    state: str
    xs: tuple


Metric = Union[Coverage, RateCoverage, BigG, Assoc, JointLos, ServingG]


def _coverage_values(scene: SimScene, params: Params, taus: np.ndarray, average: bool,
                     los_only: bool = False) -> np.ndarray:
    idx = scene.serving_index
    if idx is None:
        return np.zeros(taus.size)
    if los_only and not scene.los_flags[idx]:
        return np.zeros(taus.size)
    pw = _powers(scene, params)
    s = pw[idx]
    others = np.delete(pw, idx)
    others = others[others > 0]
    if average:
        ratio = others / s
        log_lt = np.log1p(taus[:, None] * ratio[None, :]).sum(axis=1) if ratio.size else 0.0
        return np.exp(-taus * params.noise_power / s - log_lt)
    h = scene.fading
    sig = h[idx] * s
    hint = np.delete(h, idx)[np.delete(pw, idx) > 0]
    sinr = sig / (params.noise_power + float(np.sum(hint * others)))
    return (sinr > taus).astype(float)


def _map(cfg: SimConfig, fn: Callable[[int], np.ndarray], width: int, workers: Optional[int]) -> np.ndarray:
    """fn(scene_index) -> vector of length ``width``; rows in scene order."""
    n = cfg.n_scenes
    out = np.empty((n, width))

    def run(lo: int):
        for i in range(lo, min(lo + _CHUNK, n)):
            out[i] = fn(i)

    starts = range(0, n, _CHUNK)
    workers = workers or default_workers()
    if workers <= 1 or n <= _CHUNK:
        for lo in starts:
            run(lo)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    return out


def _forced_location(cfg: SimConfig, index: int, x: float):
    rng = _rng(cfg, index, stream=1)
    if cfg.dimension == 1:
        return x if rng.random() < 0.5 else -x
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return (x * math.cos(phi), x * math.sin(phi))


def _joint_los_row(cfg: SimConfig, index: int, pts: np.ndarray) -> np.ndarray:
    """Blockages only around the links, rotated at random; 2D."""
    rng = _rng(cfg, index, stream=2)
    blockage = cfg.params.blockage
    reach = float(np.max(pts[:, :2])) + blockage.length.max
    seg = _segments(rng, blockage, reach)
    rot = rng.uniform(0.0, 2.0 * math.pi)
    a = np.column_stack([pts[:, 0] * math.cos(rot), pts[:, 0] * math.sin(rot)])
    b = np.column_stack([pts[:, 1] * np.cos(rot + pts[:, 2]), pts[:, 1] * np.sin(rot + pts[:, 2])])
    la = los_flags_2d(seg, a)
    single = pts[:, 1] <= 0
    lb = np.where(single, True, los_flags_2d(seg, np.where(single[:, None], 1.0, b)))
    return (la & lb).astype(float)


def estimate_curve(cfg: SimConfig, metric: Metric, workers: Optional[int] = None) -> list[EstimateWithCI]:
    """One estimate per grid point; every grid point shares the same scenes."""
    p = cfg.params
    if isinstance(metric, Coverage):
        taus = np.asarray(metric.taus, dtype=float)
        fn = lambda i: _coverage_values(generate_scene(cfg, i), p, taus, metric.fading_average)
        rows = _map(cfg, fn, taus.size, workers)
    elif isinstance(metric, RateCoverage):
        rhos = np.asarray(metric.rhos, dtype=float)
        los_only = RateMode(metric.alloc.mode) is RateMode.LOS_ONLY
        a_los = estimate_curve(cfg, Assoc("L"), workers)[0].mean if los_only else 1.0
        n_u = metric.alloc.users_per_cell(p, a_los)
        taus = np.expm1(rhos * n_u / p.bandwidth * math.log(2.0))
        fn = lambda i: _coverage_values(generate_scene(cfg, i), p, taus, True, los_only)
        rows = _map(cfg, fn, taus.size, workers)
    elif isinstance(metric, BigG):
        rs = np.asarray(metric.rs, dtype=float)
        want = LinkState.of(metric.state) is LinkState.L

        def fn(i):
            sc = generate_scene(cfg, i)
            if sc.serving_index is None or bool(sc.los_flags[sc.serving_index]) != want:
                return np.zeros(rs.size)
            return (sc.distances[sc.serving_index] > rs).astype(float)

        rows = _map(cfg, fn, rs.size, workers)
    elif isinstance(metric, Assoc):
        want = LinkState.of(metric.state) is LinkState.L

        def fn(i):
            sc = generate_scene(cfg, i)
            ok = sc.serving_index is not None and bool(sc.los_flags[sc.serving_index]) == want
            return np.array([float(ok)])

        rows = _map(cfg, fn, 1, workers)
    elif isinstance(metric, JointLos):
        if cfg.dimension != 2:
            raise ValueError("joint LoS estimates are 2D")
        pts = np.asarray(metric.points, dtype=float).reshape(-1, 3)
        rows = _map(cfg, lambda i: _joint_los_row(cfg, i, pts), len(pts), workers)
    elif isinstance(metric, ServingG):
        xs = np.asarray(metric.xs, dtype=float)
        want = LinkState.of(metric.state) is LinkState.L

        def fn(i):
            row = np.empty(xs.size)
            for j, x in enumerate(xs):
                sc = generate_scene(cfg, i, forced=_forced_location(cfg, i, float(x)))
                row[j] = float(sc.serving_index == 0 and bool(sc.los_flags[0]) == want)
            return row

        rows = _map(cfg, fn, xs.size, workers)
    else:
        raise TypeError(f"unsupported metric {metric!r}")
    return [EstimateWithCI.from_samples(rows[:, j]) for j in range(rows.shape[1])]


def interference_lt(state, nu: float) -> Callable[[SimScene, Params], float]:
    """Functional E[exp(-nu I_state)] given the geometry (fading averaged)."""
    want = LinkState.of(state) is LinkState.L

    def f(scene: SimScene, params: Params) -> float:
        if nu == 0:
            return 1.0
        pw = _powers(scene, params)
        mask = scene.los_flags == want
        mask[scene.serving_index] = False
        return float(np.exp(-np.log1p(nu * pw[mask]).sum()))

    return f


def estimate_conditioned(
    cfg: SimConfig,
    serving_state,
    r: float,
    half_width: float,
    functional: Callable[[SimScene, Params], float],
    workers: Optional[int] = None,
    min_accepted: int = _MIN_ACCEPTED,
) -> EstimateWithCI:
    """Mean of ``functional`` over scenes whose serving BS is ``serving_state`` at r +- half_width."""
    if half_width <= 0:
        raise ValueError("half_width must be > 0")
    want = LinkState.of(serving_state) is LinkState.L
    p = cfg.params

    def fn(i):
        sc = generate_scene(cfg, i)
        k = sc.serving_index
        if k is None or bool(sc.los_flags[k]) != want or abs(sc.distances[k] - r) > half_width:
            return np.array([math.nan])
        return np.array([functional(sc, p)])

    vals = _map(cfg, fn, 1, workers)[:, 0]
    vals = vals[~np.isnan(vals)]
    if vals.size < min_accepted:
        raise InsufficientSamples(f"{vals.size} accepted scenes, need {min_accepted}")
    return EstimateWithCI.from_samples(vals)
