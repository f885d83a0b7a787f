"""Dyadic cube addresses, the 3Q tripling system, containment and enumeration.

A cube of order m with integer corner indices (a_1, ..., a_n) is the half-open
box prod_i [a_i * 2^-m, (a_i + 1) * 2^-m).  Orders are signed; no floating
point ever touches cube coordinates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .exact_geometry import Point, as_point, rat


@dataclass(frozen=True, order=True)
class DyadicCube:
    order: int
    corner: tuple  # integer indices, cube = corner * 2^-order (+ one unit)

    @property
    def n(self) -> int:
        return len(self.corner)

    def side(self) -> Fraction:
        return Fraction(2) ** (-self.order)

    def bounds(self):
        s = self.side()
        lo = tuple(Fraction(a) * s for a in self.corner)
        hi = tuple(Fraction(a + 1) * s for a in self.corner)
        return lo, hi

    def center(self) -> Point:
        s = self.side()
        return tuple((Fraction(a) + Fraction(1, 2)) * s for a in self.corner)

    def contains_point(self, x: Point) -> bool:
        """Half-open containment."""
        lo, hi = self.bounds()
        return all(l <= c < h for l, c, h in zip(lo, x, hi))

    def to_json(self) -> dict:
        return {"m": self.order, "corner": list(self.corner)}

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicCube":
        return cls(int(obj["m"]), tuple(int(c) for c in obj["corner"]))


def triple_bounds(q: DyadicCube):
    """Closed bounding box of 3Q (same center, three times the sidelength)."""
    s = q.side()
    lo = tuple((Fraction(a) - 1) * s for a in q.corner)
    hi = tuple((Fraction(a) + 2) * s for a in q.corner)
    return lo, hi


def interior3Q_contains(q: DyadicCube, x: Point) -> bool:
    """Strict containment in the open interior of 3Q."""
    lo, hi = triple_bounds(q)
    return all(l < c < h for l, c, h in zip(lo, x, hi))


def cube_of_point(x: Point, m: int) -> DyadicCube:
    """The unique order-m cube containing x (floor of x * 2^m per axis)."""
    scale = Fraction(2) ** m
    corner = tuple((c * scale).numerator // (c * scale).denominator for c in x)
    return DyadicCube(m, corner)


def refine(q: DyadicCube) -> list:
    """The 2^n children of order m+1, in lexicographic corner order."""
    base = tuple(2 * a for a in q.corner)
    kids = []
    for offs in itertools.product((0, 1), repeat=q.n):
        kids.append(DyadicCube(q.order + 1, tuple(b + o for b, o in zip(base, offs))))
    kids.sort(key=lambda c: c.corner)
    return kids


def parent(q: DyadicCube) -> DyadicCube:
    return DyadicCube(q.order - 1, tuple(a // 2 for a in q.corner))


def _ceil_frac(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def _floor_frac(q: Fraction) -> int:
    return q.numerator // q.denominator


def grid_cubes(region_min: Point, region_max: Point, m: int) -> Iterator[DyadicCube]:
    """All order-m cubes whose closed extent meets the closed region.

    Deterministic lexicographic corner order.
    """
    region_min = as_point(region_min)
    region_max = as_point(region_max)
    scale = Fraction(2) ** m
    ranges = []
    for lo, hi in zip(region_min, region_max):
        if hi < lo:
            raise ValueError("region_max below region_min")
        i_min = _ceil_frac(lo * scale - 1)
        i_max = _floor_frac(hi * scale)
        ranges.append(range(i_min, i_max + 1))
    for corner in itertools.product(*ranges):
        yield DyadicCube(m, corner)


def enclosing_cubes(x: Point, m_coarse: int, m_fine: int) -> list:
    """All cubes Q with x in the open interior of 3Q, orders m_coarse..m_fine."""
    if m_coarse > m_fine:
        raise ValueError("m_coarse must not exceed m_fine")
    out = []
    for m in range(m_coarse, m_fine + 1):
        base = cube_of_point(x, m)
        scale = Fraction(2) ** m
        options = []
        for i, a in enumerate(base.corner):
            opts = [-1, 0]
            if x[i] * scale > a:  # not on the left face
                opts.append(1)
            options.append(sorted(opts))
        for offs in itertools.product(*options):
            q = DyadicCube(m, tuple(a + o for a, o in zip(base.corner, offs)))
            out.append(q)
    out.sort(key=lambda c: (c.order, c.corner))
    return out


def cubes_tripling_cube(q: DyadicCube, m: int) -> list:
    """Order-m cubes whose open 3Q interior contains the closed cube q.

    Requires m <= q.order; pure integer arithmetic on corner indices.
    """
    if m > q.order:
        raise ValueError("m must not exceed the cube's order")
    shift = q.order - m
    options = []
    anchors = []
    for c in q.corner:
        a = c >> shift
        anchors.append(a)
        opts = [0]
        if c > (a << shift):  # strictly off the left face
            opts.append(1)
        if c + 1 < ((a + 1) << shift):  # strictly off the right face
            opts.append(-1)
        options.append(sorted(opts))
    out = []
    for offs in itertools.product(*options):
        out.append(DyadicCube(m, tuple(a + o for a, o in zip(anchors, offs))))
    out.sort(key=lambda c: c.corner)
    return out


def cubes_tripling_box(box_min: Point, box_max: Point, m: int) -> list:
    """Order-m cubes Q whose open 3Q interior contains the given closed box.

    The box must fit inside a single order-m cell (true for any dyadic cube of
    order >= m).  At most 3^n cubes, lexicographic order.
    """
    scale = Fraction(2) ** m
    options = []
    anchors = []
    for lo, hi in zip(box_min, box_max):
        a = _floor_frac(lo * scale)
        if hi * scale > a + 1:
            raise ValueError("box spans more than one cell at this order")
        anchors.append(a)
        opts = [0]
        if lo * scale > a:  # strictly off the left face: Q may shift right
            opts.append(1)
        if hi * scale < a + 1:  # strictly off the right face: Q may shift left
            opts.append(-1)
        options.append(sorted(opts))
    out = []
    for offs in itertools.product(*options):
        out.append(DyadicCube(m, tuple(a + o for a, o in zip(anchors, offs))))
    out.sort(key=lambda c: c.corner)
    return out
