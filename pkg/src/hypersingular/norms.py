"""Lebesgue, weak and Lorentz norms of grid functions, and corner operator norms.

Norms are computed exactly for the discrete measure carried by the grid
weights.  The Lorentz norm uses the layer-cake normalization

    ||f||_{p,1} = p * int_0^inf |{|f| > lam}|^{1/p} dlam,

which gives ``||f||_{p,inf} <= ||f||_p <= ||f||_{p,1}`` for every ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grids import AnnulusGrid, GridFunction, PolarGrid
from .sparse import GradedSparseFamily

__all__ = [
    "LorentzExponent",
    "lp_norm",
    "weak_norm",
    "lorentz_p1_norm",
    "lorentz_norm",
    "distribution",
    "op_norm_corner",
    "CORNERS",
    "weak_opnorm_from_constant",
    "restricted_probe",
]

CORNERS = ((1, 1), (np.inf, 1), (np.inf, np.inf), (1, np.inf))


@dataclass(frozen=True)
class LorentzExponent:
    p: float
    r: float

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"Lorentz exponent p must be >= 1, got {self.p}")
        if self.r not in (1, np.inf):
            raise ValueError("only r = 1 and r = inf are supported")


def _weighted_measure(f: GridFunction, weight) -> np.ndarray:
    grid = f.grid
    w = grid.weights
    if weight is None:
        return w
    if isinstance(grid, PolarGrid):
        return w * weight(grid.radius)
    if isinstance(grid, AnnulusGrid):
        edges = np.concatenate([grid.inner_radius, [1.0]])
        return np.array([weight.area_integral(a, b) for a, b in zip(edges[:-1], edges[1:])])
    raise TypeError("radial weights need a polar or annulus grid")


def lp_norm(f: GridFunction, p: float, weight=None) -> float:
    """Quadrature ``L^p`` norm; ``p = inf`` is the largest absolute value."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    mu = _weighted_measure(f, weight)
    return float((a**p @ mu) ** (1.0 / p))


def distribution(f: GridFunction):
    """Distinct values of ``|f|`` in decreasing order and ``|{|f| >= v}|`` for each."""
    a = np.abs(f.values)
    order = np.argsort(-a, kind="stable")
    v = a[order]
    cum = np.cumsum(f.grid.weights[order])
    last = np.ones(v.size, dtype=bool)
    last[:-1] = v[:-1] != v[1:]
    return v[last], cum[last]


def weak_norm(f: GridFunction, q: float) -> float:
    """``sup_lam lam |{|f| > lam}|^{1/q}``, attained as ``lam`` increases to a sample value."""
    if not q >= 1 or np.isinf(q):
        raise ValueError(f"q must lie in [1, inf), got {q}")
    v, cum = distribution(f)
    if v.size == 0:
        return 0.0
    return float(np.max(v * cum ** (1.0 / q)))


def lorentz_p1_norm(f: GridFunction, p: float) -> float:
    """``p int_0^inf mu(lam)^{1/p} dlam``; ``mu`` is a step function so the integral is a finite sum."""
    if not p >= 1 or np.isinf(p):
        raise ValueError(f"p must lie in [1, inf), got {p}")
    v, cum = distribution(f)
    if v.size == 0:
        return 0.0
    gaps = v - np.append(v[1:], 0.0)
    return float(p * np.sum(cum ** (1.0 / p) * gaps))


def lorentz_norm(f: GridFunction, exponent: LorentzExponent) -> float:
    if exponent.r == 1:
        return lorentz_p1_norm(f, exponent.p)
    return weak_norm(f, exponent.p)


def _family_measures(family: GradedSparseFamily, convention: str) -> np.ndarray:
    if family.geometry == "carleson":
        ell = np.exp2(-family.levels.astype(float))
        return ell * ell * (2 - ell) if convention == "exact" else ell * ell
    return family.measures("flat")


def _max_chain(family: GradedSparseFamily, values: np.ndarray, positions: np.ndarray) -> float:
    """Largest sum of ``values`` over the selected cubes containing a common point."""
    sel = np.zeros(len(family), dtype=bool)
    sel[positions] = True
    cum = np.where(sel, values, 0.0)
    par = family.parent
    # nearest selected ancestor carries the running sum; parents precede children
    acc = np.zeros(len(family))
    for k in np.unique(family.levels):
        idx = np.flatnonzero(family.levels == k)
        p = par[idx]
        acc[idx] = cum[idx] + np.where(p >= 0, acc[np.maximum(p, 0)], 0.0)
    return float(acc[positions].max())


def _corner_key(corner) -> tuple:
    p, q = corner
    norm = lambda x: np.inf if (isinstance(x, str) and x in ("inf", "∞")) or x == np.inf else int(x)
    return norm(p), norm(q)


def op_norm_corner(family: GradedSparseFamily, t: float, corner, layer: Optional[int] = None,
                   convention: str = "exact") -> float:
    """Exact norm of ``K(x, y) = sum_Q 1_Q(x) 1_Q(y) |Q|^-t`` between corner spaces.

    ``corner = (p, q)`` for ``L^p -> L^q`` with ``p, q in {1, inf}``.  The
    ``L^1 -> L^1`` and ``L^inf -> L^inf`` norms are the largest chain sum of
    ``|Q|^{1-t}``, ``L^inf -> L^1`` is ``sum |Q|^{2-t}`` and ``L^1 -> L^inf``
    the largest chain sum of ``|Q|^-t``.  ``layer`` restricts to one layer.
    """
    p, q = _corner_key(corner)
    meas = _family_measures(family, convention)
    positions = np.arange(len(family)) if layer is None else family.layer_positions(layer)
    if (p, q) in ((1, 1), (np.inf, np.inf)):
        return _max_chain(family, meas ** (1 - t), positions)
    if (p, q) == (np.inf, 1):
        return float(np.sum(meas[positions] ** (2 - t)))
    if (p, q) == (1, np.inf):
        return _max_chain(family, meas ** (-t), positions)
    raise ValueError(f"unsupported corner {corner!r}; expected one of (1,1), (inf,1), (inf,inf), (1,inf)")


def weak_opnorm_from_constant(op, q: float, grid) -> float:
    """``||T 1||_{q, inf}``, which equals ``||T||_{L^inf -> L^{q,inf}}`` for positive ``T``."""
    if not getattr(op, "positive", False):
        raise ValueError("weak_opnorm_from_constant needs a positive operator; use bergman_positive")
    return weak_norm(op.apply(GridFunction.constant(grid)), q)


def restricted_probe(op, p: float, q: float, test_sets: Sequence, grid=None) -> float:
    """Largest ``||T 1_E||_{q,inf} / |E|^{1/p}`` over the given node masks.

    A lower bound for the restricted weak type ``(p, q)`` constant.
    """
    sets = list(test_sets)
    if not sets:
        raise ValueError("restricted_probe needs at least one test set")
    best = 0.0
    for E in sets:
        f = E if isinstance(E, GridFunction) else GridFunction.indicator(grid, E)
        measure = float(np.abs(f.values) @ f.grid.weights)
        if measure <= 0:
            raise ValueError("test sets must have positive measure")
        best = max(best, weak_norm(op.apply(f), q) / measure ** (1.0 / p))
    return best
