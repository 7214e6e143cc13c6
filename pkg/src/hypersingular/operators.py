"""Discretized hypersingular operators.

* ``apply_maximal``: dyadic maximal operator ``sup_{Q ∋ z} |Q|^-t int_Q |f|``.
* ``apply_sparse`` / ``apply_sparse_layer``: ``sum_Q 1_Q |Q|^-t int_Q |f|``.
* ``bergman_at`` / ``apply_bergman``: ``int f(w) (1 - z conj(w))^-2t dA(w)``
  and its positive variant with ``|1 - z conj(w)|^-2t``.
* ``sparse_domination_check`` and ``level_set_decomposition``.

Box integrals are quadrature sums over the nodes lying in the box, where a
polar node belongs to the box over arc ``I`` at level ``k`` when its radius is
at least ``1 - 2^-k`` and its angle lies in ``I``.  The normalization ``|Q|``
is the exact box area (``convention="exact"``) or ``l^2`` (``"square"``).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .dyadic import STANDARD, SHIFTED, CarlesonBox, DyadicArc, DyadicSystem, carleson_box, _radial_depth
from .grids import AnnulusGrid, CubeGrid, GridFunction, PolarGrid
from .sparse import GradedSparseFamily, _keys, degree, max_sparseness, sparseness_witness, family_carleson

__all__ = [
    "ResolutionError",
    "QuadratureWarning",
    "OperatorSpec",
    "apply_maximal",
    "resolvable_level",
    "apply_sparse",
    "apply_sparse_layer",
    "sparse_kernel_matrix",
    "bergman_at",
    "bergman_matrix",
    "apply_bergman",
    "apply_bergman_positive",
    "DominationResult",
    "sparse_domination_check",
    "sparse_denominator",
    "level_set_decomposition",
    "boxes_node_mask",
]

MIN_NODES_PER_BOX = 4


class ResolutionError(ValueError):
    """The grid cannot resolve the requested dyadic boxes."""


class QuadratureWarning(UserWarning):
    """Near-diagonal kernel values dominate a quadrature sum."""


def _box_measure(level: int, convention: str) -> float:
    ell = 2.0**-level
    if convention == "exact":
        return ell * ell * (2 - ell)
    if convention == "square":
        return ell * ell
    raise ValueError(f"unknown box measure convention {convention!r}")


# dyadic maximal operator

def _level_rows(grid: PolarGrid, k: int) -> int:
    """First radial row whose node lies at radius >= 1 - 2^-k."""
    return int(np.searchsorted(grid.r, 1.0 - 2.0**-k, side="left"))


def _level_nodes_min(grid: PolarGrid, system: DyadicSystem, k: int) -> int:
    rows = grid.n_r - _level_rows(grid, k)
    if rows == 0:
        return 0
    cols = np.bincount(system.indices(grid.theta, k), minlength=2**k)
    return rows * int(cols.min())


def resolvable_level(grid: PolarGrid, system=STANDARD, min_nodes: int = MIN_NODES_PER_BOX) -> int:
    """Deepest level ``K`` such that every box of levels ``0..K`` holds ``min_nodes`` nodes."""
    system = DyadicSystem.parse(system)
    k = -1
    while k < 60 and _level_nodes_min(grid, system, k + 1) >= min_nodes:
        k += 1
    if k < 0:
        raise ResolutionError("grid too coarse to resolve even the whole-disc box")
    return k


def _box_integrals(grid: PolarGrid, system: DyadicSystem, weighted: np.ndarray, max_level: int):
    """Yield ``(k, first_row, arc_of_column, integrals)`` for levels ``0..max_level``."""
    a = weighted.reshape(grid.shape)
    suffix = np.zeros((grid.n_r + 1, grid.n_theta))
    suffix[:-1] = np.cumsum(a[::-1], axis=0)[::-1]
    for k in range(max_level + 1):
        i0 = _level_rows(grid, k)
        arcs = system.indices(grid.theta, k)
        B = np.bincount(arcs, weights=suffix[i0], minlength=2**k)
        yield k, i0, arcs, B


def apply_maximal(system, t: float, f: GridFunction, max_level: Optional[int] = None,
                  convention: str = "exact") -> GridFunction:
    """Dyadic hypersingular maximal function of ``f`` at every grid node.

    On a :class:`PolarGrid` the sup runs over levels ``0..max_level`` (default:
    the deepest level every box resolves with at least 4 nodes); asking for a
    deeper level raises :class:`ResolutionError`.  On an :class:`AnnulusGrid`
    (radial ``f``, constant on annuli, zero tail) the result is exact.
    """
    system = DyadicSystem.parse(system)
    grid = f.grid
    absf = np.abs(f.values)
    if isinstance(grid, AnnulusGrid):
        return _maximal_annulus(t, f, convention)
    if not isinstance(grid, PolarGrid):
        raise TypeError("apply_maximal needs a PolarGrid or AnnulusGrid function")
    deepest = resolvable_level(grid, system)
    if max_level is None:
        max_level = deepest
    elif max_level > deepest:
        k = deepest + 1
        raise ResolutionError(
            f"level {max_level} requested but level-{k} boxes hold only "
            f"{_level_nodes_min(grid, system, k)} < {MIN_NODES_PER_BOX} nodes")
    out = np.zeros(grid.shape)
    for k, i0, arcs, B in _box_integrals(grid, system, absf * grid.weights, max_level):
        vals = B[arcs] / _box_measure(k, convention) ** t
        np.maximum(out[i0:], vals[None, :], out=out[i0:])
    truncated = int(grid.n_theta * (grid.n_r - _level_rows(grid, max_level + 1)))
    meta = {"operator": "maximal", "t": t, "system": system.name, "max_level": max_level,
            "truncated_nodes": truncated, "convention": convention}
    return GridFunction(grid, out.reshape(-1), meta)


def _maximal_annulus(t: float, f: GridFunction, convention: str) -> GridFunction:
    grid = f.grid
    absf = np.abs(f.values)
    if absf[-1] != 0:
        raise ValueError("radial maximal function needs a zero tail (it is infinite there otherwise)")
    K = grid.K
    mass = absf * grid.weights
    tail_mass = np.cumsum(mass[::-1])[::-1][: K + 1]  # int over |z| >= 1 - 2^-i
    levels = np.arange(K + 1)
    ell = 2.0**-levels
    meas = np.array([_box_measure(int(k), convention) for k in levels])
    v = ell * tail_mass / meas**t
    run = np.maximum.accumulate(v)
    out = np.concatenate([run, [run[-1]]])
    meta = {"operator": "maximal", "t": t, "exact": True, "convention": convention}
    return GridFunction(grid, out, meta)


def level_set_decomposition(system, t: float, f: GridFunction, alpha: float,
                            max_level: Optional[int] = None, convention: str = "exact") -> list[CarlesonBox]:
    """Maximal dyadic boxes with ``|Q|^-t int_Q f > alpha``.

    The boxes are pairwise disjoint, each strictly larger dyadic box fails the
    threshold, and (for the same ``max_level``) their union on grid nodes is
    exactly ``{M f > alpha}``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    system = DyadicSystem.parse(system)
    grid = f.grid
    if not isinstance(grid, PolarGrid):
        raise TypeError("level_set_decomposition needs a PolarGrid function")
    if max_level is None:
        max_level = resolvable_level(grid, system)
    out = []
    covered = np.zeros(1, dtype=bool)
    for k, _, _, B in _box_integrals(grid, system, np.abs(f.values) * grid.weights, max_level):
        hit = B / _box_measure(k, convention) ** t > alpha
        if k > 0:
            covered = np.repeat(covered, 2)
        new = hit & ~covered
        for m in np.flatnonzero(new):
            out.append(carleson_box(DyadicArc(k, int(m), system), convention))
        covered = covered | hit
    return out


def boxes_node_mask(boxes, grid: PolarGrid) -> np.ndarray:
    """Nodes of ``grid`` lying in at least one of ``boxes``."""
    mask = np.zeros(grid.size, dtype=bool)
    radius, angle = grid.radius, grid.angle
    for b in boxes:
        arc = b.arc
        inside = (radius >= 1.0 - 2.0**-arc.level) & (arc.system.indices(angle, arc.level) == arc.index)
        mask |= inside
    return mask


# sparse operators

def _family_measures(family: GradedSparseFamily, convention: str) -> np.ndarray:
    if family.geometry == "carleson":
        return np.array([_box_measure(int(k), convention) for k in family.levels])
    return family.measures("flat")


def _sparse_pass(family: GradedSparseFamily, positions: np.ndarray, t: float, f: GridFunction,
                 convention: str) -> np.ndarray:
    grid = f.grid
    weighted = np.abs(f.values) * grid.weights
    out = np.zeros(grid.size)
    if positions.size == 0:
        return out
    meas = _family_measures(family, convention)
    levels = family.levels[positions]
    if family.geometry == "carleson":
        if not isinstance(grid, PolarGrid):
            raise TypeError("Carleson families act on PolarGrid functions")
        system = family.system
        radius, angle = grid.radius, grid.angle
    else:
        if not isinstance(grid, CubeGrid) or grid.n != family.n:
            raise TypeError(f"{family.n}-d cube families act on CubeGrid functions of the same dimension")
        if int(levels.max()) > grid.level:
            raise ResolutionError(f"family reaches level {int(levels.max())} but the grid has level {grid.level}")
        cells = grid.cell_index
    for k in np.unique(levels):
        k = int(k)
        pos = positions[levels == k]
        cube_keys = family._keys[pos]
        if family.geometry == "carleson":
            inside = np.flatnonzero(radius >= 1.0 - 2.0**-k)
            node_keys = system.indices(angle[inside], k) << k
        else:
            inside = np.arange(grid.size)
            node_keys = _keys(cells >> (grid.level - k), k)
        slot = np.searchsorted(cube_keys, node_keys)
        slot_c = np.minimum(slot, cube_keys.size - 1)
        hit = cube_keys[slot_c] == node_keys
        nodes, slot_c = inside[hit], slot_c[hit]
        integrals = np.bincount(slot_c, weights=weighted[nodes], minlength=cube_keys.size)
        vals = integrals / meas[pos] ** t
        out[nodes] += vals[slot_c]
    return out


def apply_sparse_layer(family: GradedSparseFamily, j: int, t: float, f: GridFunction,
                       convention: str = "exact") -> GridFunction:
    """Sparse operator restricted to layer ``j`` (a disjointly supported sum)."""
    out = _sparse_pass(family, family.layer_positions(j), t, f, convention)
    return GridFunction(f.grid, out, {"operator": "sparse_layer", "layer": j, "t": t})


def apply_sparse(family: Optional[GradedSparseFamily], t: float, f: GridFunction,
                 convention: str = "exact") -> GridFunction:
    """``sum_Q 1_Q |Q|^-t int_Q |f|`` over the family, evaluated at every node.

    Computed as the sum of the layer outputs in increasing layer order, so that
    layer additivity holds bit for bit.
    """
    if family is None or len(family) == 0:
        return GridFunction(f.grid, np.zeros(f.grid.size), {"operator": "sparse", "t": t})
    out = np.zeros(f.grid.size)
    for j in range(family.n_layers):
        out = out + _sparse_pass(family, family.layer_positions(j), t, f, convention)
    return GridFunction(f.grid, out, {"operator": "sparse", "t": t, "layers": family.n_layers})


def _membership(family: GradedSparseFamily, grid) -> np.ndarray:
    """Dense node-by-cube membership matrix (small grids only)."""
    M = np.zeros((grid.size, len(family)))
    for i, cube in enumerate(family):
        k = cube.level
        if family.geometry == "carleson":
            inside = (grid.radius >= 1.0 - 2.0**-k) & (family.system.indices(grid.angle, k) == cube.index[0])
        else:
            cells = grid.cell_index >> (grid.level - k)
            inside = np.all(cells == np.array(cube.index), axis=1)
        M[inside, i] = 1.0
    return M


def sparse_kernel_matrix(family: GradedSparseFamily, t: float, grid, convention: str = "exact") -> np.ndarray:
    """Dense kernel ``K(x, y) = sum_Q 1_Q(x) 1_Q(y) |Q|^-t`` on grid nodes."""
    if grid.size > 2**13:
        raise ValueError("dense kernels are limited to 8192 nodes")
    M = _membership(family, grid)
    return (M * _family_measures(family, convention) ** -t) @ M.T


# Bergman-type operators

def _kernel(t: float, z: np.ndarray, w: np.ndarray, positive: bool) -> np.ndarray:
    if positive:
        # |1 - z conj(w)|^2 = 1 - 2 Re(z conj(w)) + |z|^2 |w|^2, in real arithmetic
        re = np.multiply.outer(z.real, w.real) + np.multiply.outer(z.imag, w.imag)
        d2 = 1.0 - 2.0 * re + np.multiply.outer(np.abs(z) ** 2, np.abs(w) ** 2)
        return d2 ** -t
    return np.power(1.0 - z[:, None] * np.conj(w)[None, :], -2.0 * t)


def bergman_matrix(t: float, points, grid: PolarGrid, positive: bool = False) -> np.ndarray:
    """Kernel values times quadrature weights: rows are output points."""
    z = np.asarray(points, dtype=complex).reshape(-1)
    return _kernel(t, z, grid.points, positive) * grid.weights[None, :]


def bergman_at(t: float, f: GridFunction, points, positive: bool = False, chunk: int = 64,
               workers: int = 1, check: bool = True) -> np.ndarray:
    """Quadrature value of the (positive) Bergman-type integral at ``points``.

    Output chunks are independent, so ``workers > 1`` evaluates them in a
    thread pool.  With ``check`` set, a :class:`QuadratureWarning` is issued
    when terms with ``|1 - z conj(w)|`` below four cell diameters carry more
    than 10% of the value at some point.
    """
    grid = f.grid
    if not isinstance(grid, PolarGrid):
        raise TypeError("Bergman operators need a PolarGrid function")
    z = np.asarray(points, dtype=complex).reshape(-1)
    if np.any(np.abs(z) >= 1):
        raise ValueError("evaluation points must lie in the open unit disc")
    w = grid.points
    fw = f.values * grid.weights
    diam = grid.cell_diameter

    def block(sl):
        K = _kernel(t, z[sl], w, positive)
        terms = K * fw[None, :]
        vals = terms.sum(axis=1)
        flagged = 0
        if check:
            near = np.abs(1.0 - z[sl, None] * np.conj(w)[None, :]) < 4 * diam[None, :]
            near_part = np.abs(np.where(near, terms, 0).sum(axis=1))
            flagged = int(np.count_nonzero(near_part > 0.1 * np.abs(vals)))
        return vals, flagged

    slices = [slice(i, min(i + chunk, z.size)) for i in range(0, z.size, chunk)]
    if workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(block, slices))
    else:
        parts = [block(s) for s in slices]
    out = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, dtype=complex)
    flagged = sum(p[1] for p in parts)
    if flagged:
        warnings.warn(f"near-diagonal quadrature dominates at {flagged} of {z.size} points; refine the grid",
                      QuadratureWarning, stacklevel=2)
    return out.real if positive and not np.iscomplexobj(f.values) else out


def apply_bergman(t: float, f: GridFunction, **kw) -> GridFunction:
    """Complex Bergman-type integral at every node of ``f``'s grid (dense, O(N^2))."""
    vals = bergman_at(t, f, f.grid.points, positive=False, **kw)
    return GridFunction(f.grid, vals, {"operator": "bergman", "t": t})


def apply_bergman_positive(t: float, f: GridFunction, **kw) -> GridFunction:
    vals = bergman_at(t, f, f.grid.points, positive=True, **kw)
    return GridFunction(f.grid, vals, {"operator": "bergman_positive", "t": t})


# sparse domination

@dataclass
class DominationResult:
    sup_ratio: float
    ratios: np.ndarray
    nodes: np.ndarray
    depth: int
    meta: dict = field(default_factory=dict)


def sparse_denominator(t: float, f: GridFunction, depth: Optional[int] = None,
                       convention: str = "exact") -> tuple[np.ndarray, int]:
    """``(A_D + A_D~) f`` at every node, Carleson families to the nodes' depth."""
    grid = f.grid
    if depth is None:
        depth = _radial_depth(float(grid.r[-1]))
    total = np.zeros(grid.size)
    for system in (STANDARD, SHIFTED):
        total = total + apply_sparse(family_carleson(depth, system), t, f, convention).values
    return total, depth


def sparse_domination_check(t: float, f: GridFunction, nodes=None, depth: Optional[int] = None,
                            kernel: Optional[np.ndarray] = None, convention: str = "exact") -> DominationResult:
    """Sup over ``nodes`` of positive Bergman value over the two-system sparse bound.

    With families reaching the radial depth of every node, each pair of nodes
    shares a box from one system whose area is at most
    ``COMMON_BOX_CONSTANT |1 - z conj(w)|^2``, so the ratio is at most
    ``COMMON_BOX_CONSTANT^t`` exactly on the grid.  ``kernel`` may pass a
    precomputed :func:`bergman_matrix` for the chosen nodes.
    """
    grid = f.grid
    if np.any(f.values < 0):
        raise ValueError("sparse domination is stated for f >= 0")
    nodes = np.arange(grid.size) if nodes is None else np.asarray(nodes)
    den, depth = sparse_denominator(t, f, depth, convention)
    den = den[nodes]
    if kernel is not None:
        num = kernel @ f.values
    else:
        num = bergman_at(t, f, grid.points[nodes], positive=True, check=False)
    ratios = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    if np.any((den == 0) & (num > 0)):
        raise ValueError("sparse bound vanishes where the Bergman value does not")
    sup = float(ratios.max()) if ratios.size else 0.0
    return DominationResult(sup, ratios, nodes, depth, {"t": t, "convention": convention})


# operator specifications

KINDS = ("maximal", "sparse", "sparse_layer", "bergman", "bergman_positive")


@dataclass(frozen=True)
class OperatorSpec:
    """An operator kind with its index ``t``, validated against the admissible range.

    Maximal and Bergman kinds need ``1 < t < 3/2``; sparse kinds need
    ``1 < t < 1 - log2(1 - eta) / (n K)`` with ``eta`` the certified sparseness
    (residual witness, or the optimal one if that vanishes) and ``K`` the degree.
    """

    kind: str
    t: float
    family: Optional[GradedSparseFamily] = None
    system: DyadicSystem = STANDARD
    layer: Optional[int] = None
    eta: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "system", DyadicSystem.parse(self.system))
        if self.kind in ("maximal", "bergman", "bergman_positive"):
            if not 1 < self.t < 1.5:
                raise ValueError(f"t = {self.t} outside the admissible range 1 < t < 3/2")
            return
        if self.family is None:
            raise ValueError("sparse operators need a family")
        if self.kind == "sparse_layer" and self.layer is None:
            raise ValueError("sparse_layer needs a layer index")
        bound = self.t_bound()
        if not 1 < self.t < bound:
            raise ValueError(f"t = {self.t} outside the admissible range 1 < t < {bound:.6g} "
                             f"(1 - log2(1 - eta) / (n K))")

    def t_bound(self) -> float:
        fam = self.family
        if fam.n_layers < 2:
            return float("inf")
        eta = self.eta
        if eta is None:
            eta = sparseness_witness(fam, with_sets=False).eta
            if eta == 0:
                eta = max_sparseness(fam)[0]
        return 1 - np.log2(1 - float(eta)) / (fam.n * degree(fam))

    @property
    def positive(self) -> bool:
        return self.kind != "bergman"

    def apply(self, f: GridFunction) -> GridFunction:
        if self.kind == "maximal":
            return apply_maximal(self.system, self.t, f)
        if self.kind == "sparse":
            return apply_sparse(self.family, self.t, f)
        if self.kind == "sparse_layer":
            return apply_sparse_layer(self.family, self.layer, self.t, f)
        if self.kind == "bergman":
            return apply_bergman(self.t, f)
        return apply_bergman_positive(self.t, f)
