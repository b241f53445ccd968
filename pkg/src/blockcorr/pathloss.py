"""LoS/NLoS received-power laws and the association exclusion radii.

All distances are metres and powers watts (transmit power folded into the
near-field gains ``C_L``/``C_N``).

``e1(x)`` is how close an NLoS BS may be when the serving BS is LoS at ``x``;
``e2(x)`` is how close a LoS BS may be when the serving BS is NLoS at ``x``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import hyp2f1

from .errors import InvalidPathLoss, NoBracket
from .numerics import DEFAULT_QUAD, find_root_increasing, integrate

__all__ = ["LinkState", "PathLossKind", "PathLossSpec", "ell", "excl_e1", "excl_e2"]


class LinkState(str, enum.Enum):
    L = "L"
    N = "N"

    @classmethod
    def of(cls, value) -> "LinkState":
        return value if isinstance(value, cls) else cls(str(value).upper())


class PathLossKind(str, enum.Enum):
    BPLP = "BPLP"
    LAP = "LAP"
    CUSTOM = "Custom"


_VALIDATION_GRID = np.concatenate([[0.0], np.geomspace(1e-3, 1e5, 999)])
_ROOT_TOL = 1e-9


@dataclass(frozen=True)
class PathLossSpec:
    """Bounded, non-increasing LoS/NLoS path-loss pair.

    Use :meth:`bplp`, :meth:`lap` or :meth:`custom` rather than the raw
    constructor.
    """

    kind: PathLossKind
    alpha_L: float = 2.2
    alpha_N: float = 3.6
    C_L: float = 1e-6
    C_N: float = 1e-7
    custom_L: Optional[Callable] = field(default=None, compare=False, repr=False)
    custom_N: Optional[Callable] = field(default=None, compare=False, repr=False)

    # ---- constructors -------------------------------------------------
    @classmethod
    def bplp(cls, alpha_L=2.2, alpha_N=3.6, C_L=1e-6, C_N=1e-7) -> "PathLossSpec":
        if not (C_L > C_N > 0):
            raise InvalidPathLoss("BPLP needs C_L > C_N > 0")
        if alpha_L <= 0 or alpha_N <= 0:
            raise InvalidPathLoss("path-loss exponents must be positive")
        return cls(PathLossKind.BPLP, float(alpha_L), float(alpha_N), float(C_L), float(C_N))

    @classmethod
    def lap(cls, alpha_L=2.2, C_L=1e-6) -> "PathLossSpec":
        if C_L <= 0 or alpha_L <= 0:
            raise InvalidPathLoss("LAP needs C_L > 0 and alpha_L > 0")
        return cls(PathLossKind.LAP, float(alpha_L), math.nan, float(C_L), 0.0)

    @classmethod
    def custom(cls, ell_L: Callable, ell_N: Callable) -> "PathLossSpec":
        """Arbitrary vectorised callables; checked on a 1000-point grid."""
        vl = np.asarray(ell_L(_VALIDATION_GRID), dtype=float)
        vn = np.asarray(ell_N(_VALIDATION_GRID), dtype=float)
        if not (np.all(np.isfinite(vl)) and np.all(np.isfinite(vn))):
            raise InvalidPathLoss("path-loss must be bounded")
        if np.any(vl < vn):
            raise InvalidPathLoss("LoS power must dominate NLoS power at every distance")
        if np.any(np.diff(vl) > 0) or np.any(np.diff(vn) > 0):
            raise InvalidPathLoss("path-loss functions must be non-increasing")
        if np.any(vn < 0):
            raise InvalidPathLoss("received power must be non-negative")
        return cls(
            PathLossKind.CUSTOM, math.nan, math.nan, float(vl[0]), float(vn[0]), ell_L, ell_N
        )

    # ---- derived constants ---------------------------------------------
    @property
    def alpha(self) -> float:
        """Exponent ratio alpha_L / alpha_N."""
        return self.alpha_L / self.alpha_N

    @property
    def c(self) -> float:
        """(C_N / C_L) ** (1 / alpha_N)."""
        return (self.C_N / self.C_L) ** (1.0 / self.alpha_N)

    @property
    def nlos_possible(self) -> bool:
        return self.kind is not PathLossKind.LAP

    @property
    def e1_knee(self) -> float:
        """Largest LoS serving distance at which no NLoS exclusion applies (BPLP)."""
        return self.c ** (-1.0 / self.alpha)

    def kinks(self) -> list[float]:
        """Distances where ell or the exclusion radii are non-smooth."""
        if self.kind is PathLossKind.BPLP:
            return [1.0, self.e1_knee]
        if self.kind is PathLossKind.LAP:
            return [1.0]
        return []

    # ---- power laws -------------------------------------------------------
    def ell(self, state, x):
        state = LinkState.of(state)
        x = np.asarray(x, dtype=float)
        if self.kind is PathLossKind.CUSTOM:
            fn = self.custom_L if state is LinkState.L else self.custom_N
            out = np.asarray(fn(x), dtype=float)
        elif state is LinkState.N and self.kind is PathLossKind.LAP:
            out = np.zeros_like(x)
        else:
            C, a = (self.C_L, self.alpha_L) if state is LinkState.L else (self.C_N, self.alpha_N)
            with np.errstate(divide="ignore"):
                out = C * np.minimum(1.0, np.power(np.maximum(x, 0.0), -a))
        return float(out) if out.ndim == 0 else out

    def ell_L(self, x):
        return self.ell(LinkState.L, x)

    def ell_N(self, x):
        return self.ell(LinkState.N, x)

    # ---- exclusion radii --------------------------------------------------
    def e1(self, x):
        """min{y : ell_N(y) <= ell_L(x)}."""
        x = np.asarray(x, dtype=float)
        if self.kind is PathLossKind.LAP:
            out = np.zeros_like(x)
        elif self.kind is PathLossKind.BPLP:
            out = np.where(x <= self.e1_knee, 0.0, self.c * np.power(np.maximum(x, 0.0), self.alpha))
        else:
            out = np.vectorize(self._e1_custom, otypes=[float])(x)
        return float(out) if out.ndim == 0 else out

    def e2(self, x):
        """min{y : ell_L(y) <= ell_N(x)}; ``inf`` when no LoS power is that low."""
        x = np.asarray(x, dtype=float)
        if self.kind is PathLossKind.LAP:
            out = np.full_like(x, math.inf)
        elif self.kind is PathLossKind.BPLP:
            base = np.where(x <= 1.0, 1.0, np.maximum(x, 1.0))
            out = np.power(base / self.c, 1.0 / self.alpha)
        else:
            out = np.vectorize(self._e2_custom, otypes=[float])(x)
        return float(out) if out.ndim == 0 else out

    def exclusion(self, interferer, serving, x):
        """Exclusion radius for an ``interferer``-type BS given ``serving`` type at ``x``."""
        v, u = LinkState.of(interferer), LinkState.of(serving)
        if v is u:
            return x
        return self.e1(x) if u is LinkState.L else self.e2(x)

    def interference_tail(self, state, s: float, a, moment: int = 0):
        """Integral over [a, inf) of ``y**moment * s*ell(y) / (1 + s*ell(y))``.

        Closed form (Gauss hypergeometric) for the power-law models, adaptive
        quadrature for custom ones. Vectorised in ``a``.
        """
        state = LinkState.of(state)
        a = np.asarray(a, dtype=float)
        if s <= 0 or (state is LinkState.N and not self.nlos_possible):
            return _scalar(np.zeros_like(a))
        if self.kind is PathLossKind.CUSTOM:
            fn = self.custom_L if state is LinkState.L else self.custom_N

            def one(lo):
                if math.isinf(lo):
                    return 0.0
                f = lambda y: y**moment * s * float(fn(np.asarray(y))) / (1.0 + s * float(fn(np.asarray(y))))
                return integrate(f, lo, math.inf, DEFAULT_QUAD)

            return _scalar(np.vectorize(one, otypes=[float])(a))
        C, k = (self.C_L, self.alpha_L) if state is LinkState.L else (self.C_N, self.alpha_N)
        if not k > moment + 1:
            raise InvalidPathLoss("path-loss exponent too small for a finite interference integral")
        sc = s * C
        y0 = sc ** (1.0 / k)
        lo = np.maximum(a, 1.0)
        far = y0 ** (moment + 1) * _power_tail(lo / y0, k, moment)
        # inside the unit near field the power is flat at C
        near = np.where(a < 1.0, (1.0 - np.minimum(a, 1.0) ** (moment + 1)) / (moment + 1), 0.0) * sc / (1.0 + sc)
        out = np.where(np.isinf(a), 0.0, far + near)
        return _scalar(out)

    def _min_distance(self, fn: Callable, level: float, x: float) -> float:
        if float(fn(np.asarray(0.0))) <= level:
            return 0.0
        g = lambda y: level - float(fn(np.asarray(y)))
        hi = 10.0 * x + 1e4
        for _ in range(8):
            try:
                return find_root_increasing(g, 0.0, hi, _ROOT_TOL * max(1.0, hi) * 1e-3)
            except NoBracket:
                hi *= 10.0
        return math.inf

    def _e1_custom(self, x: float) -> float:
        return self._min_distance(self.custom_N, float(self.custom_L(np.asarray(x))), x)

    def _e2_custom(self, x: float) -> float:
        level = float(self.custom_N(np.asarray(x)))
        if level <= 0.0:
            return math.inf
        return self._min_distance(self.custom_L, level, x)


def _scalar(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def _power_tail(z, k: float, m: int):
    """Integral of t**m / (1 + t**k) over [z, inf), z >= 0."""
    z = np.asarray(z, dtype=float)
    p = m + 1.0
    out = np.empty_like(z)
    small = z <= 1.0
    if np.any(small):
        zs = z[small]
        total = (math.pi / k) / math.sin(math.pi * p / k)
        out[small] = total - zs**p / p * hyp2f1(1.0, p / k, 1.0 + p / k, -(zs**k))
    if np.any(~small):
        zb = z[~small]
        q = (k - p) / k
        with np.errstate(over="ignore", under="ignore"):
            out[~small] = zb ** (p - k) / (k - p) * hyp2f1(1.0, q, 1.0 + q, -(zb ** (-k)))
    return out


def ell(spec: PathLossSpec, state, x):
    return spec.ell(state, x)


def excl_e1(spec: PathLossSpec, x):
    return spec.e1(x)


def excl_e2(spec: PathLossSpec, x):
    return spec.e2(x)
