"""Quadrature, modified Bessel functions and a bracketing root finder.

Nothing in here knows about networks. The analysis modules lean on two
integration styles: adaptive :func:`integrate` (scipy QUADPACK) for one-off
scalar integrals, and :class:`PanelGrid` for vectorised composite
Gauss-Legendre rules that also give running (cumulative) integrals at the
nodes, which is what the nested coverage integrals need.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy import integrate as _spi

from .errors import NoBracket, NonConvergence

__all__ = [
    "QuadSpec",
    "DEFAULT_QUAD",
    "INNER_QUAD",
    "integrate",
    "bessel_i",
    "find_root_increasing",
    "PanelGrid",
    "geometric_breaks",
]


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200
    # improper integrals stop where the caller's exponential envelope
    # has fallen to exp(-tail_cutoff_exponent)
    tail_cutoff_exponent: float = 30.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.tail_cutoff_exponent < 10:
            raise ValueError("tail_cutoff_exponent must be >= 10")


DEFAULT_QUAD = QuadSpec()
INNER_QUAD = QuadSpec(rel_tol=1e-6, abs_tol=1e-12)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadSpec = DEFAULT_QUAD,
    envelope_rate: Optional[float] = None,
    points: Optional[Sequence[float]] = None,
) -> float:
    """Integrate ``f`` over ``[a, b]``; ``b`` may be ``math.inf``.

    With an infinite upper limit and ``envelope_rate`` given, the integrand is
    assumed to decay at least like ``exp(-envelope_rate * x)`` and the range is
    cut at ``a + tail_cutoff_exponent / envelope_rate``. Without a rate the
    infinite range goes to QUADPACK's own transformation.
    """
    if b == a:
        return 0.0
    if math.isinf(b) and envelope_rate is not None and envelope_rate > 0:
        b = a + spec.tail_cutoff_exponent / envelope_rate
    kwargs = dict(
        epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1
    )
    if points is not None and not math.isinf(b):
        pts = sorted(p for p in points if a < p < b)
        if pts:
            kwargs["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _spi.IntegrationWarning)
        out = _spi.quad(f, a, b, **kwargs)
    value, err, info = out[0], out[1], out[2]
    ier = out[3] if len(out) > 3 else 0
    if ier not in (0,) and err > max(spec.abs_tol, spec.rel_tol * abs(value)):
        # ier=2 (round-off) with tiny error is tolerated by the test above
        raise NonConvergence(
            f"quad on [{a}, {b}] stalled: estimate {value!r}, error {err!r} (ier={ier})"
        )
    return float(value)


# --------------------------------------------------------------------------
# modified Bessel functions of the first kind, orders 0 and 1

_SERIES_TERMS = 64
_ASYMPTOTIC_TERMS = 24
_SWITCH = 15.0
_EXP_LIMIT = 709.0


def _bessel_series(n: int, x: np.ndarray) -> np.ndarray:
    h2 = (x / 2.0) ** 2
    term = (x / 2.0) ** n / math.factorial(n)
    total = term.copy()
    for k in range(_SERIES_TERMS):
        term = term * h2 / ((k + 1) * (k + 1 + n))
        total += term
    return total


def _bessel_asymptotic(n: int, x: np.ndarray, scaled: bool = False) -> np.ndarray:
    mu = 4.0 * n * n
    term = np.ones_like(x)
    total = term.copy()
    for k in range(1, _ASYMPTOTIC_TERMS + 1):
        term = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        total += term
    lead = 1.0 if scaled else np.exp(x)
    return lead / np.sqrt(2.0 * np.pi * x) * total


def bessel_i(n: int, x, scaled: bool = False):
    """Modified Bessel function ``I_n(x)`` for ``n`` in {0, 1} and ``x >= 0``.

    Power series below x=15, Hankel asymptotic expansion above. Accepts
    scalars or arrays. With ``scaled=True`` returns ``exp(-x) I_n(x)``, which
    never overflows; otherwise raises ``OverflowError`` instead of returning inf.
    """
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("bessel_i needs x >= 0")
    if not scaled and np.any(arr > _EXP_LIMIT):
        raise OverflowError(f"I_{n}(x) overflows double precision for x > {_EXP_LIMIT}")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    small = flat < _SWITCH
    if np.any(small):
        out[small] = _bessel_series(n, flat[small])
        if scaled:
            out[small] *= np.exp(-flat[small])
    if np.any(~small):
        out[~small] = _bessel_asymptotic(n, flat[~small], scaled)
    if np.ndim(arr) == 0:
        return float(out[0])
    return out.reshape(arr.shape)


# --------------------------------------------------------------------------

def find_root_increasing(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9) -> float:
    """Bisection for a non-decreasing ``f``.

    Returns (to within ``tol``) the smallest ``y`` in ``[lo, hi]`` with
    ``f(y) >= 0``, which for flat stretches of ``f`` is the left edge of the
    zero set. Raises :class:`NoBracket` when no sign change is bracketed.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if flo > 0 or fhi < 0:
        raise NoBracket(f"f(lo)={flo!r} and f(hi)={fhi!r} have the same sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# composite Gauss-Legendre panels

@lru_cache(maxsize=None)
def _reference_rule(order: int):
    x, w = legendre.leggauss(order)
    # spectral integration matrix: S @ f(x) ~ integral from -1 to x_i
    vander = legendre.legvander(x, order - 1)
    eye = np.eye(order)
    antider = np.column_stack(
        [legendre.legval(x, legendre.legint(eye[k], lbnd=-1)) for k in range(order)]
    )
    S = antider @ np.linalg.inv(vander)
    return x, w, S


class PanelGrid:
    """Composite Gauss-Legendre rule on consecutive panels ``breaks[i]..breaks[i+1]``."""

    def __init__(self, breaks: Iterable[float], order: int = 12):
        b = np.asarray(sorted(set(float(v) for v in breaks)), dtype=float)
        if b.size < 2:
            b = np.array([b[0], b[0]]) if b.size else np.array([0.0, 0.0])
        self.breaks = b
        self.order = order
        x, w, S = _reference_rule(order)
        half = 0.5 * np.diff(b)
        mid = 0.5 * (b[1:] + b[:-1])
        self.nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        self.weights = (half[:, None] * w[None, :]).ravel()
        self._half = half
        self._S = S
        self.n_panels = b.size - 1

    @property
    def lower(self) -> float:
        return float(self.breaks[0])

    @property
    def upper(self) -> float:
        return float(self.breaks[-1])

    def integral(self, fvals: np.ndarray, axis: int = -1) -> np.ndarray:
        return np.tensordot(fvals, self.weights, axes=([axis], [0]))

    def integral_panels(self, fvals: np.ndarray) -> np.ndarray:
        """Integral over each panel (last axis)."""
        f = np.asarray(fvals, dtype=float)
        prod = f * self.weights
        return prod.reshape(f.shape[:-1] + (self.n_panels, self.order)).sum(axis=-1)

    def cumulative(self, fvals: np.ndarray) -> np.ndarray:
        """Running integral from ``breaks[0]`` up to every node (last axis)."""
        f = np.asarray(fvals, dtype=float)
        lead = f.shape[:-1]
        f = f.reshape(lead + (self.n_panels, self.order))
        local = np.einsum("ij,...pj->...pi", self._S, f) * self._half[:, None]
        panel_tot = (f * self.weights.reshape(self.n_panels, self.order)).sum(axis=-1)
        offset = np.cumsum(panel_tot, axis=-1) - panel_tot
        return (local + offset[..., None]).reshape(lead + (self.n_panels * self.order,))


def geometric_breaks(
    a: float,
    b: float,
    first: float,
    growth: float = 2.0,
    fixed: Iterable[float] = (),
) -> list[float]:
    """Panel edges on ``[a, b]`` whose widths grow geometrically from ``first``.

    ``fixed`` points inside the range (kinks of the integrand) are always edges.
    """
    if b <= a:
        return [a, a]
    edges = [a]
    w = first
    x = a
    while x + w < b:
        x += w
        edges.append(x)
        w *= growth
    edges.append(b)
    edges.extend(p for p in fixed if a < p < b)
    return sorted(set(edges))
