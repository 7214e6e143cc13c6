"""Dyadic cubes, graded sparse families and sparseness witnesses.

A family lives in the root cube ``Q_0 = [0,1)^n`` and is stored as two integer
arrays (levels and index vectors) so that families with millions of cubes stay
cheap.  The layer of a cube is the number of its strict ancestors inside the
family, which is the same as peeling off maximal cubes repeatedly.

Families of Carleson boxes use ``geometry="carleson"``: the box over arc
``(k, m)`` is stored as the 2-d cube ``(k, (m, 0))`` in the coordinates
``(x, s)`` with ``x`` the torus coordinate (relative to the system's offset)
and ``s = 1 - |z|``.  Flat measure of such a cube is ``4^-k``; the disc
measure is the exact box area ``l^2 (2 - l)``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional

import numpy as np

from .dyadic import DyadicSystem, box_area

__all__ = [
    "DyadicCube",
    "GradedSparseFamily",
    "DegenerateFamilyError",
    "LayerDecomposition",
    "SparsenessWitness",
    "ValidationReport",
    "layer_decomposition",
    "degree",
    "tail_degree",
    "sparseness_witness",
    "max_sparseness",
    "validate",
    "family_full_tree",
    "family_carleson",
    "family_counterexample",
    "to_native_normalization",
    "box_measure",
]

FORMAT_TAG = "# hypersingular family v1"


class DegenerateFamilyError(ValueError):
    """Raised for single-layer families, whose operator is rank one."""


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    index: tuple

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if self.level < 0:
            raise ValueError("cube level must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.index)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 2**self.level)

    @property
    def measure(self) -> Fraction:
        return Fraction(1, 2 ** (self.n * self.level))

    @property
    def inside_root(self) -> bool:
        return all(0 <= i < 2**self.level for i in self.index)

    def box(self) -> tuple:
        s = self.side
        return tuple((i * s, (i + 1) * s) for i in self.index)

    def ancestor(self, level: int) -> "DyadicCube":
        if not 0 <= level <= self.level:
            raise ValueError(f"no ancestor at level {level} for a level-{self.level} cube")
        d = self.level - level
        return DyadicCube(level, tuple(i >> d for i in self.index))

    def parent(self) -> "DyadicCube":
        return self.ancestor(self.level - 1)

    def children(self) -> list["DyadicCube"]:
        return [DyadicCube(self.level + 1, tuple(2 * i + b for i, b in zip(self.index, bits)))
                for bits in product((0, 1), repeat=self.n)]

    def contains(self, other: "DyadicCube") -> bool:
        if other.n != self.n or other.level < self.level:
            return False
        return other.ancestor(self.level) == self


def box_measure(box, geometry: str = "cube", measure: str = "flat") -> Fraction:
    """Measure of an axis-aligned box given as ``((lo, hi), ...)``."""
    if measure == "flat":
        m = Fraction(1)
        for lo, hi in box:
            m *= hi - lo
        return m
    if measure == "disc":
        if geometry != "carleson":
            raise ValueError("disc measure is only defined for Carleson families")
        (x0, x1), (s0, s1) = box
        return (x1 - x0) * ((1 - s0) ** 2 - (1 - s1) ** 2)
    raise ValueError(f"unknown measure {measure!r}")


def _keys(index: np.ndarray, level) -> np.ndarray:
    """Injective integer key of each index vector within its level."""
    level = np.asarray(level, dtype=np.int64)
    key = np.zeros(index.shape[0], dtype=np.int64)
    for d in range(index.shape[1]):
        key = (key << level) | index[:, d]
    return key


class GradedSparseFamily:
    """Finite family of dyadic cubes in ``[0,1)^n`` with its layer structure.

    The root cube is adjoined when missing.  Cubes are sorted by level and
    then by key; ``parent[i]`` is the position of the nearest strict ancestor
    inside the family (``-1`` for the root) and ``layer[i]`` the layer index.
    """

    def __init__(self, levels, index, geometry: str = "cube", meta: Optional[dict] = None):
        levels = np.asarray(levels, dtype=np.int64).reshape(-1)
        index = np.asarray(index, dtype=np.int64)
        if index.ndim == 1:
            index = index.reshape(-1, 1)
        if index.shape[0] != levels.shape[0]:
            raise ValueError("levels and index arrays disagree in length")
        n = index.shape[1]
        if n < 1:
            raise ValueError("cubes need at least one coordinate")
        if geometry not in ("cube", "carleson"):
            raise ValueError(f"unknown geometry {geometry!r}")
        if geometry == "carleson" and n != 2:
            raise ValueError("Carleson families are 2-dimensional")
        if np.any(levels < 0):
            raise ValueError("cube levels must be nonnegative")
        if levels.size and int(levels.max()) * n > 62:
            raise ValueError("cube levels too deep for 64-bit keys")
        bad = (index < 0) | (index >= (np.int64(1) << levels)[:, None])
        if np.any(bad):
            i = int(np.flatnonzero(bad.any(axis=1))[0])
            raise ValueError(f"cube (level {levels[i]}, index {tuple(index[i])}) is not contained in the root cube")
        if not np.any(levels == 0):
            levels = np.concatenate([[0], levels])
            index = np.vstack([np.zeros((1, n), dtype=np.int64), index])
        keys = _keys(index, levels)
        order = np.lexsort((keys, levels))
        levels, index, keys = levels[order], index[order], keys[order]
        uniq = np.ones(levels.size, dtype=bool)
        uniq[1:] = (levels[1:] != levels[:-1]) | (keys[1:] != keys[:-1])
        self.levels = levels[uniq]
        self.index = index[uniq]
        self._keys = keys[uniq]
        for a in (self.levels, self.index, self._keys):
            a.setflags(write=False)
        self.n = n
        self.geometry = geometry
        self.meta = dict(meta or {})
        self._build_layers()

    @classmethod
    def from_cubes(cls, cubes: Iterable[DyadicCube], geometry: str = "cube", meta=None, n: Optional[int] = None):
        cubes = list(cubes)
        if not cubes:
            if n is None:
                raise ValueError("cannot infer the dimension of an empty family")
            return cls(np.zeros(0), np.zeros((0, n)), geometry, meta)
        dims = {c.n for c in cubes}
        if len(dims) != 1 or (n is not None and dims != {n}):
            raise ValueError("cubes of different dimensions")
        return cls([c.level for c in cubes], [c.index for c in cubes], geometry, meta)

    def _build_layers(self):
        levels, index = self.levels, self.index
        N = levels.size
        parent = np.full(N, -1, dtype=np.int64)
        starts = {}
        for L in np.unique(levels):
            sel = np.flatnonzero(levels == L)
            starts[int(L)] = (sel[0], sel[-1] + 1)
        todo = np.flatnonzero(levels > 0)
        for L in range(int(levels.max()) - 1, -1, -1):
            if L not in starts or todo.size == 0:
                continue
            cand = todo[levels[todo] > L]
            if cand.size == 0:
                continue
            shift = (levels[cand] - L)[:, None]
            anc = _keys(index[cand] >> shift, L)
            a, b = starts[L]
            lvl_keys = self._keys[a:b]
            pos = np.searchsorted(lvl_keys, anc)
            pos_c = np.minimum(pos, b - a - 1)
            hit = lvl_keys[pos_c] == anc
            parent[cand[hit]] = a + pos_c[hit]
            todo = np.setdiff1d(todo, cand[hit], assume_unique=True)
        layer = np.zeros(N, dtype=np.int64)
        # parents come earlier in the level-sorted order
        for L in sorted(starts):
            a, b = starts[L]
            p = parent[a:b]
            layer[a:b] = np.where(p >= 0, layer[np.maximum(p, 0)] + 1, 0)
        self.parent = parent
        self.layer = layer
        self.n_layers = int(layer.max()) + 1 if N else 0
        deepest = np.full(self.n_layers, -1, dtype=np.int64)
        np.maximum.at(deepest, layer, levels)
        self.layer_max_level = deepest
        for a in (self.parent, self.layer, self.layer_max_level):
            a.setflags(write=False)

    def __len__(self):
        return int(self.levels.size)

    def __iter__(self):
        for k, idx in zip(self.levels.tolist(), self.index.tolist()):
            yield DyadicCube(k, tuple(idx))

    def cube(self, i: int) -> DyadicCube:
        return DyadicCube(int(self.levels[i]), tuple(self.index[i].tolist()))

    @property
    def cubes(self) -> list[DyadicCube]:
        return list(self)

    def __contains__(self, cube: DyadicCube) -> bool:
        return self.position(cube) >= 0

    def position(self, cube: DyadicCube) -> int:
        if cube.n != self.n:
            return -1
        sel = np.flatnonzero(self.levels == cube.level)
        if sel.size == 0:
            return -1
        key = int(_keys(np.array([cube.index], dtype=np.int64), cube.level)[0])
        keys = self._keys[sel]
        p = int(np.searchsorted(keys, key))
        return int(sel[p]) if p < keys.size and keys[p] == key else -1

    def __eq__(self, other):
        if not isinstance(other, GradedSparseFamily):
            return NotImplemented
        return (self.n == other.n and self.geometry == other.geometry and self.meta == other.meta
                and np.array_equal(self.levels, other.levels) and np.array_equal(self.index, other.index))

    def __hash__(self):
        return hash((self.n, self.geometry, self.levels.tobytes(), self.index.tobytes()))

    def __repr__(self):
        return f"GradedSparseFamily(n={self.n}, cubes={len(self)}, layers={self.n_layers}, geometry={self.geometry!r})"

    @property
    def system(self) -> Optional[DyadicSystem]:
        if self.geometry != "carleson":
            return None
        return DyadicSystem.parse(self.meta.get("system", "standard"))

    @property
    def scales(self) -> list[Fraction]:
        """``G_j``: smallest side length in layer ``j``."""
        return [Fraction(1, 2 ** int(k)) for k in self.layer_max_level]

    def layer_positions(self, j: int) -> np.ndarray:
        if not 0 <= j < self.n_layers:
            raise ValueError(f"layer {j} outside 0..{self.n_layers - 1}")
        return np.flatnonzero(self.layer == j)

    def layer_cubes(self, j: int) -> list[DyadicCube]:
        return [self.cube(i) for i in self.layer_positions(j)]

    def layers(self) -> list[list[DyadicCube]]:
        return [self.layer_cubes(j) for j in range(self.n_layers)]

    def subfamily(self, mask, meta=None) -> "GradedSparseFamily":
        mask = np.asarray(mask, dtype=bool)
        return GradedSparseFamily(self.levels[mask], self.index[mask], self.geometry,
                                  self.meta if meta is None else meta)

    def children_of(self) -> dict:
        """Map position -> positions of the family-children (next layer, inside)."""
        out = defaultdict(list)
        for i, p in enumerate(self.parent.tolist()):
            if p >= 0:
                out[p].append(i)
        return out

    def cube_measure(self, i: int, measure: str = "flat") -> Fraction:
        k = int(self.levels[i])
        if measure == "flat":
            return Fraction(1, 2 ** (self.n * k))
        if measure == "disc":
            if self.geometry != "carleson":
                raise ValueError("disc measure is only defined for Carleson families")
            return box_area(Fraction(1, 2**k))
        raise ValueError(f"unknown measure {measure!r}")

    def measures(self, measure: str = "flat") -> np.ndarray:
        """Float measures of all cubes (flat or disc)."""
        ell = np.exp2(-self.levels.astype(float))
        if measure == "flat":
            return ell**self.n
        if measure == "disc":
            if self.geometry != "carleson":
                raise ValueError("disc measure is only defined for Carleson families")
            return ell * ell * (2 - ell)
        raise ValueError(f"unknown measure {measure!r}")

    # serialization

    def to_text(self) -> str:
        lines = [FORMAT_TAG, f"# n={self.n}", "# root=0 " + " ".join("0" * self.n),
                 f"# geometry={self.geometry}",
                 "# meta " + json.dumps(self.meta, sort_keys=True, separators=(",", ":"))]
        body = np.column_stack([np.full(len(self), self.n), self.levels, self.index])
        lines.extend(" ".join(map(str, row)) for row in body.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GradedSparseFamily":
        n = None
        geometry = "cube"
        meta = {}
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("n="):
                    n = int(body[2:])
                elif body.startswith("geometry="):
                    geometry = body[len("geometry="):]
                elif body.startswith("meta "):
                    meta = json.loads(body[5:])
                elif body.startswith("root="):
                    root = [int(v) for v in body[5:].split()]
                    if any(root):
                        raise ValueError("only the root cube [0,1)^n is supported")
                continue
            vals = [int(v) for v in line.split()]
            if n is None:
                n = vals[0]
            if vals[0] != n or len(vals) != n + 2:
                raise ValueError(f"malformed cube line {raw!r}")
            rows.append(vals[1:])
        if n is None:
            raise ValueError("family text has no dimension header")
        arr = np.array(rows, dtype=np.int64).reshape(-1, n + 1)
        return cls(arr[:, 0], arr[:, 1:], geometry, meta)

    def save(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "GradedSparseFamily":
        with open(path) as fh:
            return cls.from_text(fh.read())


@dataclass(frozen=True)
class LayerDecomposition:
    layers: list
    scales: list

    def __len__(self):
        return len(self.layers)


def layer_decomposition(cubes, n: Optional[int] = None) -> LayerDecomposition:
    """Peel maximal cubes layer by layer; the root is adjoined if absent."""
    fam = cubes if isinstance(cubes, GradedSparseFamily) else GradedSparseFamily.from_cubes(cubes, n=n)
    return LayerDecomposition(fam.layers(), fam.scales)


def degree(family: GradedSparseFamily) -> int:
    """``K_S = max_j log2(G_j / G_{j+1})``; always an integer for dyadic cubes."""
    if family.n_layers < 2:
        raise DegenerateFamilyError("family has a single layer: the operator is the rank-one root average")
    return int(np.max(np.diff(family.layer_max_level)))


def tail_degree(family: GradedSparseFamily, start: Optional[int] = None) -> int:
    """Largest scale drop among layers ``>= start`` (default: second half).

    Finite stand-in for the limsup variant; diagnostic only, since the degree
    itself must be a sup over every layer.
    """
    if family.n_layers < 2:
        raise DegenerateFamilyError("family has a single layer: the operator is the rank-one root average")
    drops = np.diff(family.layer_max_level)
    if start is None:
        start = drops.size // 2
    if not 0 <= start < drops.size:
        raise ValueError(f"start must lie in 0..{drops.size - 1}")
    return int(drops[start:].max())


@dataclass
class SparsenessWitness:
    """Witness sets ``E(Q)`` and the sparseness they certify.

    ``sets`` maps family positions to lists of boxes ``((lo, hi), ...)`` with
    Fraction endpoints, or is ``None`` when only the constant was computed.
    """

    eta: Fraction
    method: str
    measure: str
    sets: Optional[dict] = None
    worst: int = 0

    @property
    def sparse(self) -> bool:
        return self.eta > 0


@dataclass
class ValidationReport:
    valid: bool
    eta: Fraction
    checked: int
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.valid


def _integer_measures(family: GradedSparseFamily, measure: str) -> list:
    """Exact per-cube measures as Python ints over a common denominator."""
    top = int(family.levels.max())
    ks = family.levels.tolist()
    if measure == "flat":
        n = family.n
        return [1 << (n * (top - k)) for k in ks]
    if measure == "disc":
        if family.geometry != "carleson":
            raise ValueError("disc measure is only defined for Carleson families")
        # l^2 (2 - l) with l = 2^-k, over the denominator 2^(3 top)
        return [(1 << (2 * (top - k))) * ((1 << (top + 1)) - (1 << (top - k))) for k in ks]
    raise ValueError(f"unknown measure {measure!r}")


def _child_sums(family: GradedSparseFamily, units: list) -> list:
    out = [0] * len(units)
    for i, p in enumerate(family.parent.tolist()):
        if p >= 0:
            out[p] += units[i]
    return out


def _subtree_sums(family: GradedSparseFamily, units: list) -> list:
    tot = list(units)
    par = family.parent.tolist()
    # deeper cubes come later in the sorted order
    for i in range(len(units) - 1, 0, -1):
        p = par[i]
        if p >= 0:
            tot[p] += tot[i]
    return tot


def max_sparseness(family: GradedSparseFamily, measure: str = "flat") -> tuple[Fraction, int]:
    """Largest ``eta`` for which the family is ``eta``-sparse, and a worst cube.

    For nested families this is ``min_Q |Q| / sum_{Q' in S, Q' in Q} |Q'|``: the
    packing bound is necessary, and the bottom-up greedy witness attains it.
    """
    units = _integer_measures(family, measure)
    tot = _subtree_sums(family, units)
    best, arg = None, 0
    for i, (u, s) in enumerate(zip(units, tot)):
        r = Fraction(u, s)
        if best is None or r < best:
            best, arg = r, i
    return best, arg


def _cube_box(family, i):
    k = int(family.levels[i])
    s = Fraction(1, 2**k)
    return tuple((int(v) * s, (int(v) + 1) * s) for v in family.index[i])


def _residual_boxes(family, q: int, kids: list) -> list:
    """Q minus the union of its family-children, as a list of dyadic boxes."""
    root = family.cube(q)
    if not kids:
        return [root.box()]
    removed = {family.cube(c) for c in kids}
    partial = set()
    for c in removed:
        for L in range(root.level, c.level):
            partial.add(c.ancestor(L))
    out = []
    stack = [root]
    while stack:
        cube = stack.pop()
        if cube in removed:
            continue
        if cube in partial:
            stack.extend(reversed(cube.children()))
        else:
            out.append(cube.box())
    return sorted(out)


def _split_box(box, frac: Fraction):
    (lo, hi), rest = box[0], box[1:]
    cut = lo + frac * (hi - lo)
    return ((lo, cut),) + rest, ((cut, hi),) + rest


def sparseness_witness(family: GradedSparseFamily, method: str = "residual", measure: str = "flat",
                       eta: Optional[Fraction] = None, with_sets: Optional[bool] = None) -> SparsenessWitness:
    """Build witness sets and the sparseness they certify.

    ``method="residual"``: ``E(Q)`` is ``Q`` minus its family-children (the
    next-layer cubes inside ``Q``).  This is zero for families that contain
    both children of a cube, in which case the returned ``eta`` is 0.

    ``method="optimal"``: bottom-up greedy.  Each ``E(Q)`` takes measure
    ``eta |Q|`` from what the deeper witnesses left free inside ``Q``, the
    last box being cut along the first axis.  ``eta`` defaults to
    :func:`max_sparseness`, so the certified constant is the best possible.
    """
    if with_sets is None:
        with_sets = len(family) <= 20000
    if method == "residual":
        units = _integer_measures(family, measure)
        kid_sum = _child_sums(family, units)
        # leaves have ratio 1; only cubes with family-children can be worse
        cand = [i for i, s in enumerate(kid_sum) if s] or [0]
        worst = min(cand, key=lambda i: (Fraction(units[i] - kid_sum[i], units[i]), i))
        eta_w = Fraction(units[worst] - kid_sum[worst], units[worst])
        sets = None
        if with_sets:
            kids = family.children_of()
            sets = {q: _residual_boxes(family, q, kids.get(q, [])) for q in range(len(family))}
        return SparsenessWitness(eta_w, "residual", measure, sets, worst)
    if method == "optimal":
        best, worst = max_sparseness(family, measure)
        target = best if eta is None else Fraction(eta)
        sets = None
        if with_sets:
            kids = family.children_of()
            leftover = {}
            sets = {}
            for q in range(len(family) - 1, -1, -1):
                avail = _residual_boxes(family, q, kids.get(q, []))
                for c in kids.get(q, []):
                    avail.extend(leftover.pop(c))
                avail.sort()
                need = target * family.cube_measure(q, measure)
                taken, rest = [], []
                for b in avail:
                    if need <= 0:
                        rest.append(b)
                        continue
                    m = box_measure(b, family.geometry, measure)
                    if m <= need:
                        taken.append(b)
                        need -= m
                    else:
                        a, r = _split_box(b, need / m) if measure == "flat" else _split_disc(b, need)
                        taken.append(a)
                        rest.append(r)
                        need = 0
                sets[q] = taken
                leftover[q] = rest
        return SparsenessWitness(min(target, best) if eta is None else target, "optimal", measure, sets, worst)
    raise ValueError(f"unknown witness method {method!r} (expected 'residual' or 'optimal')")


def _split_disc(box, need: Fraction):
    # disc measure is linear in the torus width, so cutting axis 0 is exact
    (x0, x1), (s0, s1) = box
    per_width = (1 - s0) ** 2 - (1 - s1) ** 2
    cut = x0 + need / per_width
    return ((x0, cut), (s0, s1)), ((cut, x1), (s0, s1))


def _inside(box, outer) -> bool:
    return all(o_lo <= lo and hi <= o_hi for (lo, hi), (o_lo, o_hi) in zip(box, outer))


def _overlap(a, b) -> bool:
    return all(lo1 < hi2 and lo2 < hi1 for (lo1, hi1), (lo2, hi2) in zip(a, b))


def validate(family: GradedSparseFamily, eta, witness: SparsenessWitness) -> ValidationReport:
    """Check containment, the measure bound ``|E(Q)| >= eta |Q|`` and disjointness."""
    eta = Fraction(eta)
    violations = []
    if witness.sets is None:
        raise ValueError("witness has no sets to validate (built with with_sets=False)")
    tagged = []
    for q in range(len(family)):
        boxes = witness.sets.get(q)
        cube = family.cube(q)
        if boxes is None:
            violations.append(f"cube {cube}: no witness set")
            continue
        outer = _cube_box(family, q)
        total = Fraction(0)
        for b in boxes:
            if any(hi <= lo for lo, hi in b):
                violations.append(f"cube {cube}: empty box {b}")
                continue
            if not _inside(b, outer):
                violations.append(f"cube {cube}: box {b} leaves the cube")
            total += box_measure(b, family.geometry, witness.measure)
            tagged.append((b, q))
        need = eta * family.cube_measure(q, witness.measure)
        if total < need:
            violations.append(f"cube {cube}: |E(Q)| = {total} < eta |Q| = {need}")
    # sweep along the first axis
    tagged.sort(key=lambda t: (t[0][0][0], t[0][0][1]))
    active = []
    for b, q in tagged:
        lo = b[0][0]
        active = [(a, p) for a, p in active if a[0][1] > lo]
        for a, p in active:
            if _overlap(a, b):
                violations.append(f"witness boxes of {family.cube(p)} and {family.cube(q)} overlap")
        active.append((b, q))
    return ValidationReport(not violations, eta, len(family), violations)


def family_full_tree(depth: int, n: int = 1, step: int = 1) -> GradedSparseFamily:
    """All dyadic cubes of ``[0,1)^n`` with level in ``0, step, 2 step, ... <= depth``."""
    if depth < 0 or step < 1:
        raise ValueError("need depth >= 0 and step >= 1")
    levels, index = [], []
    for k in range(0, depth + 1, step):
        grid = np.indices((2**k,) * n).reshape(n, -1).T
        levels.append(np.full(grid.shape[0], k))
        index.append(grid)
    return GradedSparseFamily(np.concatenate(levels), np.vstack(index), "cube",
                              {"kind": "full_tree", "depth": depth, "step": step})


def family_carleson(depth: int, system="standard") -> GradedSparseFamily:
    """Carleson boxes over all arcs of generations ``0..depth`` of one dyadic system."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    system = DyadicSystem.parse(system)
    levels = np.concatenate([np.full(2**k, k) for k in range(depth + 1)])
    m = np.concatenate([np.arange(2**k) for k in range(depth + 1)])
    index = np.column_stack([m, np.zeros_like(m)])
    return GradedSparseFamily(levels, index, "carleson",
                              {"kind": "carleson", "depth": depth, "system": system.name})


def family_counterexample(m: int, t: Optional[float] = None) -> GradedSparseFamily:
    """Two-layer family with an uncontrolled scale drop.

    In its native normalization the root is ``[0, 2)`` and the second layer
    consists of the ``2^m`` intervals of length ``2^-m`` tiling ``[0, 1)``.
    Stored dilated by 1/2: the root ``[0, 1)`` and the level-``m+1``
    intervals tiling ``[0, 1/2)``.  ``meta["dilation"]`` records the factor.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    m = int(m)
    if m > 60:
        raise ValueError("m too large for 64-bit keys")
    levels = np.concatenate([[0], np.full(2**m, m + 1)])
    index = np.concatenate([[0], np.arange(2**m)])
    meta = {"kind": "counterexample", "m": m, "dilation": 2}
    if t is not None:
        meta["t"] = float(t)
    return GradedSparseFamily(levels, index.reshape(-1, 1), "cube", meta)


def to_native_normalization(value, family: GradedSparseFamily, t: float):
    """Convert a value of ``A^t f`` computed on the stored family to the dilated frame.

    Dilating space by ``d`` multiplies every average ``|Q|^-t int_Q f`` by
    ``d^{n (1 - t)}``.
    """
    d = family.meta.get("dilation", 1)
    return value * float(d) ** (family.n * (1 - t))
