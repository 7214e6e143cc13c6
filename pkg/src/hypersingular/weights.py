"""Radial weights and the weighted endpoint criteria for the dyadic maximal operator.

With ``s = (3 - 2t) / (2t - 2)`` both endpoint conditions are phrased through

    a_k = 2^k * int_{1 - 2^-k}^{1 - 2^-(k+1)} w(r)^-s dr,

the weak endpoint asking for ``sup_k a_k < inf`` and the strong one for
``sum_k a_k < inf``.  Numerics cannot prove divergence, so verdicts come from
a ratio test on the tail ``k >= K_max / 2``:

* weak: Bounded if ``a_{k+1} / a_k <= 1 + rtol`` on the tail, Unbounded if
  every tail ratio exceeds ``1 + rtol`` (geometric growth), else Inconclusive.
* strong: Bounded if every tail ratio is ``<= 1 - rtol``, Unbounded if every
  tail ratio is ``>= 1 - rtol`` (terms do not decay), else Inconclusive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .grids import AnnulusGrid, GridFunction, PolarGrid, annulus_measure
from .operators import ResolutionError

__all__ = [
    "RadialWeight",
    "Verdict",
    "WeakConditionResult",
    "StrongConditionResult",
    "BekolleBonamiResult",
    "critical_power",
    "annulus_terms",
    "endpoint_weak_condition",
    "endpoint_strong_condition",
    "bekolle_bonami",
    "bekolle_bonami_power",
    "extremal_fk",
    "extremal_fN",
    "DEFAULT_H_SCHEDULE",
]

RTOL = 1e-9
DEFAULT_H_SCHEDULE = tuple(2.0**-i for i in range(1, 41))


class Verdict(enum.Enum):
    Bounded = "Bounded"
    Unbounded = "Unbounded"
    Inconclusive = "Inconclusive"

    def __str__(self):
        return self.value


def critical_power(t: float) -> float:
    """``s = (3 - 2t) / (2t - 2)``, the power of ``1/w`` in both endpoint conditions."""
    if not 1 < t < 1.5:
        raise ValueError(f"t = {t} outside 1 < t < 3/2")
    return (3 - 2 * t) / (2 * t - 2)


class RadialWeight:
    """Weight ``w(|z|)`` on the disc: ``(1 - r)^gamma`` or a tabulated profile.

    Tabulated weights are piecewise linear in ``r`` between samples and
    constant beyond the first and last sample.  Every weight must stay above
    a positive floor on ``[0, 1/2)``.
    """

    def __init__(self, kind: str, gamma: float = 0.0, r=None, w=None, source: str = ""):
        self.kind = kind
        self.gamma = float(gamma)
        self.source = source
        if kind == "power":
            if not math.isfinite(self.gamma):
                raise ValueError("power weight exponent must be finite")
            self.r = self.w = None
        elif kind == "table":
            r = np.asarray(r, dtype=float)
            w = np.asarray(w, dtype=float)
            if r.ndim != 1 or r.shape != w.shape or r.size < 2:
                raise ValueError("tabulated weight needs matching 1-d arrays with at least 2 samples")
            if np.any(np.diff(r) <= 0) or r[0] < 0 or r[-1] >= 1:
                raise ValueError("tabulated radii must increase strictly within [0, 1)")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("tabulated weight values must be finite and nonnegative")
            self.r, self.w = r, w
        else:
            raise ValueError(f"unknown weight kind {kind!r}")
        if not self.floor > 0:
            raise ValueError("weight must be bounded below by a positive constant on [0, 1/2)")

    @classmethod
    def power(cls, gamma: float) -> "RadialWeight":
        return cls("power", gamma=gamma, source=f"power:{gamma}")

    @classmethod
    def unweighted(cls) -> "RadialWeight":
        return cls.power(0.0)

    @classmethod
    def tabulated(cls, r, w, source: str = "table") -> "RadialWeight":
        return cls("table", r=r, w=w, source=source)

    @classmethod
    def parse(cls, spec: str) -> "RadialWeight":
        """``power:<gamma>`` or ``table:<path>`` (two whitespace/comma separated columns r, w)."""
        kind, _, arg = spec.partition(":")
        if kind == "power":
            return cls.power(float(arg))
        if kind == "table":
            data = np.loadtxt(arg, delimiter="," if arg.endswith(".csv") else None, ndmin=2)
            return cls.tabulated(data[:, 0], data[:, 1], source=spec)
        raise ValueError(f"weight spec must be 'power:<gamma>' or 'table:<path>', got {spec!r}")

    def __repr__(self):
        return f"RadialWeight({self.source or self.kind})"

    @property
    def is_unweighted(self) -> bool:
        return self.kind == "power" and self.gamma == 0

    @property
    def floor(self) -> float:
        """``inf`` of the weight over ``[0, 1/2)`` (attained or approached)."""
        if self.kind == "power":
            return min(1.0, 0.5**self.gamma)
        pts = np.concatenate([[0.0, 0.5], self.r[self.r < 0.5]])
        return float(np.min(self(pts)))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return (1.0 - r) ** self.gamma
        return np.interp(r, self.r, self.w)

    def _breaks(self, a: float, b: float) -> list:
        if self.kind != "table":
            return []
        return [float(x) for x in self.r if a < x < b]

    def _quad(self, fn, a: float, b: float) -> float:
        pts = [a] + self._breaks(a, b) + [b]
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            val, _ = integrate.quad(fn, lo, hi, limit=200, epsabs=0, epsrel=1e-12)
            total += val
        return total

    def power_integral(self, e: float, a: float, b: float) -> float:
        """``int_a^b w(r)^e dr`` (``inf`` if a zero of ``w`` makes it diverge)."""
        if self.kind == "power":
            # u = 1 - r
            return _monomial_integral(self.gamma * e + 1, 1.0 - b, 1.0 - a)
        if e < 0:
            lo = min(float(np.min(self(np.array([a, b])))),
                     min((float(v) for x, v in zip(self.r, self.w) if a <= x <= b), default=math.inf))
            if lo <= 0:
                return math.inf
        return self._quad(lambda r: float(self(r)) ** e, a, b)

    def area_integral(self, r0: float, r1: float) -> float:
        """``int_{r0 <= |z| < r1} w dA`` for the normalized area measure."""
        if self.kind == "power":
            g = self.gamma
            u0, u1 = 1.0 - r1, 1.0 - r0
            # dA = 2 r dr = 2 (1 - u) du
            return 2 * (_monomial_integral(g + 1, u0, u1) - _monomial_integral(g + 2, u0, u1))
        return self._quad(lambda r: 2 * r * float(self(r)), r0, r1)


def _monomial_integral(y: float, u0: float, u1: float) -> float:
    """``int_{u0}^{u1} u^(y-1) du`` for ``0 <= u0 < u1``, stable near ``y = 0``."""
    if u0 == 0:
        return u1**y / y if y > 0 else math.inf
    l0, l1 = math.log(u0), math.log(u1)
    if y == 0:
        return l1 - l0
    # u1^y (1 - (u0/u1)^y) / y
    return math.exp(y * l1) * -math.expm1(y * (l0 - l1)) / y


def annulus_terms(weight: RadialWeight, t: float, K_max: int) -> np.ndarray:
    """``a_k = 2^k int_{D_k radial range} w^-s dr`` for ``k = 0..K_max``."""
    s = critical_power(t)
    out = np.empty(K_max + 1)
    for k in range(K_max + 1):
        a, b = 1.0 - 2.0**-k, 1.0 - 2.0 ** -(k + 1)
        out[k] = 2.0**k * weight.power_integral(-s, a, b)
    return out


def _tail_ratios(a: np.ndarray) -> np.ndarray:
    tail = a[a.size // 2:]
    return tail[1:] / tail[:-1]


@dataclass
class WeakConditionResult:
    terms: np.ndarray
    sup: float
    verdict: Verdict
    s: float


@dataclass
class BekolleBonamiResult:
    constant: float
    values: np.ndarray
    h: np.ndarray
    member: Optional[bool]
    l: float


@dataclass
class StrongConditionResult:
    partial_sums: np.ndarray
    terms: np.ndarray
    verdict: Verdict
    s: float
    bekolle_bonami: Optional[BekolleBonamiResult] = None


def _check_kmax(K_max: int):
    if K_max < 4:
        raise ValueError(f"K_max must be >= 4, got {K_max}")


def endpoint_weak_condition(weight: RadialWeight, t: float, K_max: int = 40,
                            rtol: float = RTOL) -> WeakConditionResult:
    _check_kmax(K_max)
    s = critical_power(t)
    a = annulus_terms(weight, t, K_max)
    if not np.all(np.isfinite(a)):
        return WeakConditionResult(a, math.inf, Verdict.Unbounded, s)
    ratios = _tail_ratios(a)
    if np.max(ratios) <= 1 + rtol:
        verdict = Verdict.Bounded
    elif np.min(ratios) > 1 + rtol:
        verdict = Verdict.Unbounded
    else:
        verdict = Verdict.Inconclusive
    return WeakConditionResult(a, float(a.max()), verdict, s)


def endpoint_strong_condition(weight: RadialWeight, t: float, K_max: int = 40,
                              rtol: float = RTOL, check_bb: bool = True) -> StrongConditionResult:
    """Partial sums of ``a_k`` with a ratio-test verdict.

    The series criterion is stated for weights in the Bekolle-Bonami class
    ``B_l`` with ``l = 1/(3 - 2t)``; that status is reported alongside.
    """
    _check_kmax(K_max)
    s = critical_power(t)
    a = annulus_terms(weight, t, K_max)
    sums = np.cumsum(a)
    if not np.all(np.isfinite(a)):
        verdict = Verdict.Unbounded
    else:
        ratios = _tail_ratios(a)
        if np.max(ratios) <= 1 - rtol:
            verdict = Verdict.Bounded
        elif np.min(ratios) >= 1 - rtol:
            verdict = Verdict.Unbounded
        else:
            verdict = Verdict.Inconclusive
    bb = bekolle_bonami(weight, 1.0 / (3 - 2 * t)) if check_bb else None
    return StrongConditionResult(sums, a, verdict, s, bb)


def bekolle_bonami_power(gamma: float, l: float) -> float:
    """Closed-form radial window constant of ``(1 - r)^gamma`` (``inf`` outside ``-1 < gamma < l - 1``)."""
    if not (-1 < gamma < l - 1):
        return math.inf
    return 1.0 / ((gamma + 1) * (1 - gamma / (l - 1)) ** (l - 1))


def bekolle_bonami(weight: RadialWeight, l: float, h_schedule: Sequence[float] = DEFAULT_H_SCHEDULE,
                   rtol: float = 1e-6) -> BekolleBonamiResult:
    """``max_h (h^-1 int_{1-h}^1 w) (h^-1 int_{1-h}^1 w^{-1/(l-1)})^{l-1}`` along ``h_schedule``.

    ``member`` is False when a window integral diverges or the values grow
    geometrically along the schedule, True when they settle, None otherwise.
    """
    if not l > 1:
        raise ValueError(f"l must exceed 1, got {l}")
    h = np.asarray(sorted(h_schedule, reverse=True), dtype=float)
    if h.size < 2 or np.any(h <= 0) or np.any(h > 1):
        raise ValueError("h_schedule needs at least two window sizes in (0, 1]")
    e = -1.0 / (l - 1)
    vals = np.empty(h.size)
    for i, hh in enumerate(h):
        A = weight.power_integral(1.0, 1.0 - hh, 1.0) / hh
        B = weight.power_integral(e, 1.0 - hh, 1.0) / hh
        vals[i] = math.inf if not (math.isfinite(A) and math.isfinite(B)) else A * B ** (l - 1)
    if not np.all(np.isfinite(vals)):
        return BekolleBonamiResult(math.inf, vals, h, False, l)
    tail = vals[vals.size // 2:]
    ratios = tail[1:] / tail[:-1]
    if np.all(np.abs(ratios - 1) <= rtol):
        member = True
    elif np.all(ratios > 1 + rtol):
        member = False
    else:
        member = None
    return BekolleBonamiResult(float(vals.max()), vals, h, member, l)


def _annulus_rows(grid: PolarGrid, k: int) -> np.ndarray:
    lo, hi = 1.0 - 2.0**-k, 1.0 - 2.0 ** -(k + 1)
    return (grid.r >= lo) & (grid.r < hi)


def _extremal_values(weight: RadialWeight, t: float, grid, coeffs: dict) -> np.ndarray:
    """Values of ``sum_k c_k w^-s 1_{D_k}`` on the grid."""
    s = critical_power(t)
    if isinstance(grid, AnnulusGrid):
        vals = np.zeros(grid.size)
        for k, c in coeffs.items():
            if k > grid.K:
                raise ResolutionError(f"annulus D_{k} lies beyond the grid's last annulus D_{grid.K}")
            a, b = 1.0 - 2.0**-k, 1.0 - 2.0 ** -(k + 1)
            # annulus mean of w^-s; exact for the unweighted case
            mean = 1.0 if weight.is_unweighted else _area_power(weight, -s, a, b) / annulus_measure(k)
            vals[k] = c * mean
        return vals
    if isinstance(grid, PolarGrid):
        rows = np.zeros(grid.n_r)
        wr = weight(grid.r) ** -s
        for k, c in coeffs.items():
            sel = _annulus_rows(grid, k)
            if np.count_nonzero(sel) < 4:
                raise ResolutionError(f"annulus D_{k} holds {np.count_nonzero(sel)} < 4 radial nodes")
            rows[sel] = c * wr[sel]
        return np.repeat(rows, grid.n_theta)
    raise TypeError("extremal functions need a polar or annulus grid")


def _area_power(weight: RadialWeight, e: float, r0: float, r1: float) -> float:
    return weight._quad(lambda r: 2 * r * float(weight(r)) ** e, r0, r1)


def extremal_fk(weight: RadialWeight, t: float, k: int, grid) -> GridFunction:
    """``w^-s 1_{D_k}`` with ``s = (3 - 2t) / (2t - 2)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return GridFunction(grid, _extremal_values(weight, t, grid, {k: 1.0}), {"extremal": "f_k", "k": k, "t": t})


def extremal_fN(weight: RadialWeight, t: float, N: int, grid) -> GridFunction:
    """``sum_{k=0}^N 2^{k(3 - 2t)} w^-s 1_{D_k}``; the exponent of ``w`` matches :func:`extremal_fk`."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    coeffs = {k: 2.0 ** (k * (3 - 2 * t)) for k in range(N + 1)}
    return GridFunction(grid, _extremal_values(weight, t, grid, coeffs), {"extremal": "f_N", "N": N, "t": t})
