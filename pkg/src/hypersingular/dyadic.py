"""Dyadic arcs on the torus and the Carleson boxes sitting over them.

The torus is identified with ``[0, 1)`` (total length 1) and the disc carries
the normalized area measure, so the whole disc has measure 1.  Two dyadic
systems are provided: the standard one and a 1/3-shifted copy whose level-k
arcs are

    [2^-k (m + (-1)^k / 3), 2^-k (m + 1 + (-1)^k / 3))   (mod 1).

Since ``2^-k (-1)^k / 3 = 1/3 (mod 2^-k)``, these are exactly the standard
arcs translated by 1/3.  Arcs are labelled in the translated frame, i.e. arc
``(k, m)`` of the shifted system is ``[1/3 + m 2^-k, 1/3 + (m+1) 2^-k)``,
which corresponds to ``m - (2^k - (-1)^k)/3`` in the labelling of the display
above.  With this labelling both systems share the nesting rule: the
children of ``(k, m)`` are ``(k+1, 2m)`` and ``(k+1, 2m+1)``.

Together the two systems give the covering property used throughout: any pair
of points in the disc lies in a box from one of them whose area is comparable
to ``|1 - z conj(w)|^2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "DyadicSystem",
    "STANDARD",
    "SHIFTED",
    "DyadicArc",
    "CarlesonBox",
    "COMMON_BOX_CONSTANT",
    "arcs_containing",
    "carleson_box",
    "box_area",
    "tent_area",
    "box_membership",
    "find_common_box",
    "torus_coordinate",
]

# Bound for find_common_box: area <= C |1 - z conj(w)|^2.  The box level is
# capped by the radial depth, so l < 2 min(1-|z|, 1-|w|) <= 2 |1 - z conj(w)|
# and area < 2 l^2 gives C = 8; angular separation is handled by the shift and
# stays below that.  The measured supremum approaches 8 from below.
COMMON_BOX_CONSTANT = 8

CONVENTIONS = ("exact", "square")


@dataclass(frozen=True)
class DyadicSystem:
    """A dyadic system on the torus; ``shifted`` selects the 1/3-translate."""

    shifted: bool = False

    @property
    def name(self) -> str:
        return "shifted" if self.shifted else "standard"

    def offset(self, level: int = 0) -> Fraction:
        """Left endpoint of arc ``(level, 0)``; the same for every level."""
        return Fraction(1, 3) if self.shifted else Fraction(0)

    def index(self, x, level: int) -> int:
        """Index of the level-``level`` arc containing the torus point ``x``."""
        x = Fraction(x) if not isinstance(x, Fraction) else x
        y = (x - self.offset(level)) % 1
        return math.floor(y * 2**level)

    def indices(self, x: np.ndarray, level: int) -> np.ndarray:
        """Vectorized :meth:`index` for float arrays of torus coordinates."""
        y = np.mod(np.asarray(x, dtype=float) - float(self.offset(level)), 1.0)
        idx = np.floor(y * 2.0**level).astype(np.int64)
        # y can round up to exactly 1.0 for tiny negative inputs
        return np.minimum(idx, 2**level - 1)

    def arc(self, level: int, index: int) -> "DyadicArc":
        return DyadicArc(level, index % 2**level, self)

    @classmethod
    def parse(cls, name: "str | DyadicSystem") -> "DyadicSystem":
        if isinstance(name, DyadicSystem):
            return name
        if name == "standard":
            return STANDARD
        if name == "shifted":
            return SHIFTED
        raise ValueError(f"unknown dyadic system {name!r} (expected 'standard' or 'shifted')")


STANDARD = DyadicSystem(False)
SHIFTED = DyadicSystem(True)


@dataclass(frozen=True)
class DyadicArc:
    level: int
    index: int
    system: DyadicSystem = STANDARD

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"arc level must be nonnegative, got {self.level}")
        if not 0 <= self.index < 2**self.level:
            raise ValueError(f"arc index {self.index} outside [0, 2^{self.level})")

    @property
    def length(self) -> Fraction:
        return Fraction(1, 2**self.level)

    @property
    def start(self) -> Fraction:
        """Left endpoint, reduced mod 1 (the arc may wrap past 0)."""
        return (self.system.offset(self.level) + self.index * self.length) % 1

    @property
    def midpoint(self) -> Fraction:
        return (self.start + self.length / 2) % 1

    @property
    def alternating_index(self) -> int:
        """Index in the ``(-1)^k / 3`` labelling of the shifted system."""
        if not self.system.shifted:
            return self.index
        k = self.level
        return (self.index + (2**k - (-1) ** k) // 3) % 2**k

    def contains(self, x) -> bool:
        x = Fraction(x) if not isinstance(x, Fraction) else x
        return (x - self.start) % 1 < self.length

    def children(self) -> tuple["DyadicArc", "DyadicArc"]:
        k = self.level
        return (DyadicArc(k + 1, 2 * self.index, self.system),
                DyadicArc(k + 1, 2 * self.index + 1, self.system))

    def parent(self) -> "DyadicArc":
        if self.level == 0:
            raise ValueError("the level-0 arc has no parent")
        return DyadicArc(self.level - 1, self.index // 2, self.system)

    def __str__(self):
        a = self.start
        return f"[{a}, {a + self.length}) mod 1 ({self.system.name}, level {self.level})"


def box_area(length, convention: str = "exact"):
    """Normalized area of the Carleson box over an arc of the given length."""
    if convention == "exact":
        return length * length * (2 - length)
    if convention == "square":
        return length * length
    raise ValueError(f"unknown box measure convention {convention!r}")


def tent_area(length, convention: str = "exact"):
    """Normalized area of the upper tent (outer half of the radial extent)."""
    if convention == "exact":
        return length * length * (1 - Fraction(3, 4) * length)
    if convention == "square":
        return length * length / 2
    raise ValueError(f"unknown box measure convention {convention!r}")


@dataclass(frozen=True)
class CarlesonBox:
    arc: DyadicArc
    area: Fraction
    tent_area: Fraction

    @property
    def length(self) -> Fraction:
        return self.arc.length

    @property
    def inner_radius(self) -> Fraction:
        return 1 - self.arc.length

    def contains(self, z: complex) -> bool:
        return box_membership(z, self)

    def in_tent(self, z: complex) -> bool:
        r = abs(z)
        ell = self.arc.length
        return 1 - ell <= r < 1 - ell / 2 and self.arc.contains(torus_coordinate(z))


def carleson_box(arc: DyadicArc, convention: str = "exact") -> CarlesonBox:
    """Carleson box over ``arc`` with exact (rational) measures."""
    ell = arc.length
    return CarlesonBox(arc, box_area(ell, convention), tent_area(ell, convention))


def torus_coordinate(z: complex) -> Fraction:
    """Angle of ``z`` as an exact point of ``[0, 1)`` (0 for ``z = 0``)."""
    if z == 0:
        return Fraction(0)
    return Fraction(cmath.phase(z) / (2 * math.pi)) % 1


def box_membership(z: complex, box: CarlesonBox) -> bool:
    r = abs(z)
    if not r < 1:
        return False
    if r < 1 - box.arc.length:
        return False
    return box.arc.contains(torus_coordinate(z))


def arcs_containing(point, max_level: int, system: DyadicSystem = STANDARD) -> list[DyadicArc]:
    """Chain of arcs of levels ``0..max_level`` containing ``point`` (wrapped mod 1)."""
    if max_level < 0:
        raise ValueError("max_level must be nonnegative")
    x = (Fraction(point) if not isinstance(point, Fraction) else point) % 1
    return [DyadicArc(k, system.index(x, k), system) for k in range(max_level + 1)]


def _radial_depth(r: float) -> int:
    """Deepest level k with 1 - 2^-k <= r."""
    k = 0
    while k < 60 and 1.0 - 2.0 ** -(k + 1) <= r:
        k += 1
    return k


def find_common_box(
    z: complex,
    w: complex,
    systems: tuple[DyadicSystem, ...] = (STANDARD, SHIFTED),
    convention: str = "exact",
) -> CarlesonBox:
    """Smallest Carleson box from ``systems`` containing both ``z`` and ``w``.

    Boxes containing a point form a chain in each system, so the deepest common
    level per system is found by a linear scan; ties go to the first system.
    """
    if not (abs(z) < 1 and abs(w) < 1):
        raise ValueError("points must lie in the open unit disc")
    kmax = _radial_depth(min(abs(z), abs(w)))
    xz, xw = torus_coordinate(z), torus_coordinate(w)
    best = None
    for system in systems:
        k = 0
        while k < kmax and system.index(xz, k + 1) == system.index(xw, k + 1):
            k += 1
        if best is None or k > best.level:
            best = DyadicArc(k, system.index(xz, k), system)
    return carleson_box(best, convention)
