"""Quadrature grids on the disc and the unit cube, and sampled functions on them.

All measures are normalized so that the unit disc (and the cube ``[0,1]^n``)
has total measure 1.  Node arrays are flattened in row-major order; for a
polar grid row ``i`` is the radial index and column ``j`` the angular one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

__all__ = [
    "PolarGrid",
    "CubeGrid",
    "AnnulusGrid",
    "GridFunction",
    "make_polar_grid",
    "annulus_measure",
]


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Tensor-product midpoint grid on the disc ``|z| <= r_max``.

    ``r_edges`` has ``n_r + 1`` entries from 0 to ``r_max``; radial nodes are
    cell midpoints and angular nodes sit at ``(j + 1/2) / n_theta`` on the
    torus ``[0, 1)``.  Cell weights are ``(r_{i+1}^2 - r_i^2) / n_theta``.
    """

    r_edges: np.ndarray
    n_theta: int
    spacing: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "r_edges", _frozen(np.asarray(self.r_edges, dtype=float)))
        e = self.r_edges
        r = 0.5 * (e[1:] + e[:-1])
        x = (np.arange(self.n_theta) + 0.5) / self.n_theta
        w_row = (e[1:] ** 2 - e[:-1] ** 2) / self.n_theta
        object.__setattr__(self, "r", _frozen(r))
        object.__setattr__(self, "theta", _frozen(x))
        object.__setattr__(self, "_row_weights", _frozen(w_row))

    @property
    def kind(self) -> str:
        return "polar"

    @property
    def r_max(self) -> float:
        return float(self.r_edges[-1])

    @property
    def n_r(self) -> int:
        return len(self.r_edges) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @property
    def row_weights(self) -> np.ndarray:
        """Weight of a single cell in each radial row."""
        return self._row_weights

    @property
    def weights(self) -> np.ndarray:
        return np.repeat(self._row_weights, self.n_theta)

    @property
    def radius(self) -> np.ndarray:
        return np.repeat(self.r, self.n_theta)

    @property
    def angle(self) -> np.ndarray:
        """Torus coordinate in ``[0, 1)`` of every node."""
        return np.tile(self.theta, self.n_r)

    @property
    def points(self) -> np.ndarray:
        return self.radius * np.exp(2j * np.pi * self.angle)

    @property
    def cell_diameter(self) -> np.ndarray:
        """Euclidean diameter bound of each node's cell."""
        e = self.r_edges
        dr = e[1:] - e[:-1]
        arc = e[1:] * (2 * np.pi / self.n_theta)
        return np.repeat(np.hypot(dr, arc), self.n_theta)

    def describe(self) -> dict:
        return {"kind": "polar", "n_r": self.n_r, "n_theta": self.n_theta,
                "r_max": self.r_max, "spacing": self.spacing}


def make_polar_grid(n_r: int, n_theta: int, r_max: float, spacing: str = "uniform") -> PolarGrid:
    """Build a polar grid.

    ``spacing="geometric"`` places radial edges so that ``1 - r`` decreases
    geometrically from 1 to ``1 - r_max``; when ``-log2(1 - r_max)`` divides
    ``n_r`` evenly in steps, the dyadic radii ``1 - 2^-k`` are exact edges.
    """
    if int(n_r) != n_r or int(n_theta) != n_theta or n_r < 1 or n_theta < 1:
        raise ValueError(f"n_r and n_theta must be positive integers, got {n_r}, {n_theta}")
    if not 0 < r_max < 1:
        raise ValueError(f"r_max must satisfy 0 < r_max < 1, got {r_max}")
    n_r, n_theta = int(n_r), int(n_theta)
    if spacing == "uniform":
        edges = r_max * np.arange(n_r + 1) / n_r
    elif spacing == "geometric":
        u = np.exp2(math.log2(1.0 - r_max) * np.arange(n_r + 1) / n_r)
        edges = 1.0 - u
        edges[0] = 0.0
        edges[-1] = r_max
    else:
        raise ValueError(f"unknown spacing {spacing!r} (expected 'uniform' or 'geometric')")
    return PolarGrid(edges, n_theta, spacing)


@dataclass(frozen=True, eq=False)
class CubeGrid:
    """Midpoint grid of ``[0,1]^n`` with ``2^level`` cells per axis."""

    n: int
    level: int

    def __post_init__(self):
        if self.n < 1 or self.level < 0:
            raise ValueError("CubeGrid needs n >= 1 and level >= 0")
        if self.size > 2**24:
            raise ValueError(f"CubeGrid with {self.size} nodes is too large")

    @property
    def kind(self) -> str:
        return "cube"

    @property
    def side(self) -> int:
        return 2**self.level

    @property
    def size(self) -> int:
        return self.side**self.n

    @property
    def cell_index(self) -> np.ndarray:
        """Integer cell coordinates, shape ``(size, n)``; the last axis varies fastest."""
        idx = np.indices((self.side,) * self.n).reshape(self.n, -1).T
        return idx.astype(np.int64)

    @property
    def points(self) -> np.ndarray:
        return (self.cell_index + 0.5) / self.side

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def describe(self) -> dict:
        return {"kind": "cube", "n": self.n, "level": self.level}


def annulus_measure(k: int) -> float:
    """Normalized measure of ``D_k = {1 - 2^-k <= |z| < 1 - 2^-(k+1)}``."""
    a = 2.0 ** (-k - 1)
    return 2 * a - 3 * a * a


@dataclass(frozen=True, eq=False)
class AnnulusGrid:
    """One node per dyadic annulus ``D_0 .. D_K`` plus a tail node for ``|z| >= 1 - 2^-(K+1)``.

    Suited to radial functions that are constant on each annulus, for which
    radial operators can be evaluated exactly.
    """

    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("AnnulusGrid needs K >= 0")

    @property
    def kind(self) -> str:
        return "annulus"

    @property
    def size(self) -> int:
        return self.K + 2

    @property
    def weights(self) -> np.ndarray:
        w = np.array([annulus_measure(k) for k in range(self.K + 1)] + [0.0])
        eps = 2.0 ** (-self.K - 1)
        w[-1] = eps * (2 - eps)
        return w

    @property
    def inner_radius(self) -> np.ndarray:
        return 1.0 - 2.0 ** -np.arange(self.K + 2, dtype=float)

    def describe(self) -> dict:
        return {"kind": "annulus", "K": self.K}


Grid = Union[PolarGrid, CubeGrid, AnnulusGrid]


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Any
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        v = v.reshape(-1)
        if v.size != self.grid.size:
            raise ValueError(f"{v.size} values given for a grid with {self.grid.size} nodes")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def constant(cls, grid, c: float = 1.0) -> "GridFunction":
        return cls(grid, np.full(grid.size, float(c)))

    @classmethod
    def indicator(cls, grid, mask) -> "GridFunction":
        return cls(grid, np.asarray(mask, dtype=bool).astype(float).reshape(-1))

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values), dict(self.meta))

    def __add__(self, other: "GridFunction"):
        if other.grid is not self.grid:
            raise ValueError("grid functions live on different grids")
        return GridFunction(self.grid, self.values + other.values)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def integral(self) -> complex | float:
        return self.values @ self.grid.weights
