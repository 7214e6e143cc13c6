"""Exponent regions, the interpolation combiner and layer-exponent fits.

Points of the ``(1/p, 1/q)`` square are classified against the critical line
``1/q - 1/p = sigma`` with ``sigma = n K (t - 1) / (-log2(1 - eta))``.
Strong type holds strictly above the line, nothing holds below it, and on the
line the class records the best bound available: weak type everywhere for the
maximal kind, and for singular (sparse or Bergman-type) operators weak type
except at ``1/q = 1``, where only restricted weak type is known.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

__all__ = [
    "ExponentPoint",
    "BoundClass",
    "LayerNormSeries",
    "LayerFit",
    "BourgainResult",
    "critical_slope",
    "graded_endpoint",
    "classify",
    "bourgain_combine",
    "fit_layer_exponent",
    "region_samples",
    "line_endpoints",
    "KINDS",
]

Number = Union[int, float, Fraction]
KINDS = ("maximal", "singular")
LINE_ATOL = 1e-12


class BoundClass(enum.Enum):
    Strong = "Strong"
    WeakLine = "WeakLine"
    RestrictedEndpoint = "RestrictedEndpoint"
    Unbounded = "Unbounded"

    def __str__(self):
        return self.value

    @property
    def rank(self) -> int:
        """Order from best to worst bound (0 is strongest)."""
        return ("Strong", "WeakLine", "RestrictedEndpoint", "Unbounded").index(self.value)


@dataclass(frozen=True)
class ExponentPoint:
    ip: Number
    iq: Number

    def __post_init__(self):
        for name in ("ip", "iq"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} = {v} outside [0, 1]")

    @classmethod
    def from_exponents(cls, p: Number, q: Number) -> "ExponentPoint":
        inv = lambda x: 0 if x == math.inf else (Fraction(1) / x if isinstance(x, (int, Fraction)) else 1.0 / x)
        return cls(inv(p), inv(q))

    def distance(self, other: "ExponentPoint") -> float:
        return float(abs(self.ip - other.ip) + abs(self.iq - other.iq))

    def as_tuple(self) -> tuple:
        return (self.ip, self.iq)


def _log2_exact(x: Number):
    """``log2(x)``, as a Fraction when ``x`` is an exact power of two."""
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        if x > 0 and x.numerator & (x.numerator - 1) == 0 and x.denominator & (x.denominator - 1) == 0:
            return Fraction(x.numerator.bit_length() - x.denominator.bit_length())
    return math.log2(x)


def _check_params(n, t, eta, K):
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    if not 0 < eta < 1:
        raise ValueError(f"sparseness eta must lie in (0, 1), got {eta}")
    if K < 1:
        raise ValueError(f"degree K must be >= 1, got {K}")
    bound = 1 - _log2_exact(1 - Fraction(eta) if isinstance(eta, (int, Fraction)) else 1 - eta) / (n * K)
    if not 1 < t < bound:
        raise ValueError(f"t = {t} is not admissible: need 1 < t < 1 - log2(1 - eta)/(n K) = {float(bound):.6g}")


def critical_slope(n: int, t: Number, eta: Number, K: Number):
    """``sigma = n K (t - 1) / (-log2(1 - eta))``; exact when the inputs allow it."""
    _check_params(n, t, eta, K)
    one_minus = 1 - Fraction(eta) if isinstance(eta, (int, Fraction)) else 1 - eta
    return n * K * (t - 1) / (-_log2_exact(one_minus))


def graded_endpoint(n: int, t: Number, eta: Number, K: Number) -> "ExponentPoint":
    """Restricted weak-type endpoint ``((L + n K (1 - t)) / L, 1)`` with ``L = -log2(1 - eta)``."""
    _check_params(n, t, eta, K)
    one_minus = 1 - Fraction(eta) if isinstance(eta, (int, Fraction)) else 1 - eta
    L = -_log2_exact(one_minus)
    return ExponentPoint((L + n * K * (1 - t)) / L, 1)


def _on_line(diff, sigma) -> int:
    """Sign of ``diff - sigma``; exact for rationals, tolerance ``LINE_ATOL`` otherwise."""
    if isinstance(diff, (int, Fraction)) and isinstance(sigma, (int, Fraction)):
        d = Fraction(diff) - Fraction(sigma)
        return (d > 0) - (d < 0)
    d = float(diff) - float(sigma)
    if abs(d) <= LINE_ATOL:
        return 0
    return 1 if d > 0 else -1


def classify(point: ExponentPoint, sigma: Number, kind: str = "singular") -> BoundClass:
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {KINDS}")
    s = _on_line(point.iq - point.ip, sigma)
    if s > 0:
        return BoundClass.Strong
    if s < 0:
        return BoundClass.Unbounded
    if kind == "maximal":
        return BoundClass.WeakLine
    return BoundClass.RestrictedEndpoint if point.iq == 1 else BoundClass.WeakLine


@dataclass(frozen=True)
class BourgainResult:
    theta: Number
    point: ExponentPoint
    constant: float

    @property
    def restricted_only(self) -> bool:
        return True


def _inv(x):
    if x == math.inf:
        return 0
    return Fraction(1) / x if isinstance(x, (int, Fraction)) else 1.0 / x


def bourgain_combine(beta1: Number, M1: float, p1: Number, q1: Number,
                     beta2: Number, M2: float, p2: Number, q2: Number) -> BourgainResult:
    """Combine layer bounds ``M1 2^{beta1 j}`` at ``(p1, q1)`` and ``M2 2^{-beta2 j}`` at ``(p2, q2)``.

    The result is a restricted weak-type bound at the point with
    ``theta = beta2 / (beta1 + beta2)``, with constant shaped like
    ``M1^theta M2^(1 - theta)``.  Exponents may be ``math.inf``.
    """
    if not (beta1 > 0 and beta2 > 0):
        raise ValueError("bourgain_combine needs beta1 > 0 and beta2 > 0")
    theta = beta2 / (beta1 + beta2)
    ip = theta * _inv(p1) + (1 - theta) * _inv(p2)
    iq = theta * _inv(q1) + (1 - theta) * _inv(q2)
    const = float(M1) ** float(theta) * float(M2) ** float(1 - theta)
    return BourgainResult(theta, ExponentPoint(ip, iq), const)


@dataclass(frozen=True)
class LayerNormSeries:
    j: tuple
    values: tuple
    corner: str = ""

    def __post_init__(self):
        j = tuple(int(v) for v in self.j)
        vals = tuple(float(v) for v in self.values)
        if len(j) != len(vals):
            raise ValueError("layer indices and values differ in length")
        if any(b <= a for a, b in zip(j, j[1:])):
            raise ValueError("layer indices must be strictly increasing")
        if any(not v > 0 for v in vals):
            raise ValueError("layer norms must be positive")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class LayerFit:
    slope: float
    intercept: float
    residual: float


def fit_layer_exponent(series: LayerNormSeries) -> LayerFit:
    """Least-squares line through ``(j, log2 value)``; residual is the RMS misfit."""
    if len(series.j) < 3:
        raise ValueError("need at least 3 layers to fit an exponent")
    x = np.asarray(series.j, dtype=float)
    y = np.log2(np.asarray(series.values))
    if np.ptp(y) == 0:
        return LayerFit(0.0, float(y[0]), 0.0)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - y) ** 2)))
    return LayerFit(float(slope), float(icpt), resid)


def region_samples(sigma: Number, kind: str = "singular", resolution: int = 11) -> list:
    """Classification on a uniform ``resolution x resolution`` lattice of the square.

    The two ends of the critical segment inside the square are appended
    (when not already lattice points), computed from ``sigma`` directly.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    out = []
    seen = set()
    exact = isinstance(sigma, (int, Fraction))
    for a in range(resolution):
        for b in range(resolution):
            ip = Fraction(a, resolution - 1) if exact else a / (resolution - 1)
            iq = Fraction(b, resolution - 1) if exact else b / (resolution - 1)
            pt = ExponentPoint(ip, iq)
            seen.add((float(ip), float(iq)))
            out.append((pt, classify(pt, sigma, kind)))
    for pt in line_endpoints(sigma):
        if (float(pt.ip), float(pt.iq)) not in seen:
            out.append((pt, classify(pt, sigma, kind)))
    return out


def line_endpoints(sigma: Number) -> list:
    """Ends of the segment ``1/q - 1/p = sigma`` inside the square (empty if it misses)."""
    if sigma > 1 or sigma < 0:
        return []
    ends = [ExponentPoint(0 * sigma, sigma), ExponentPoint(1 - sigma, 1 + 0 * sigma)]
    return ends[:1] if sigma == 1 else ends
