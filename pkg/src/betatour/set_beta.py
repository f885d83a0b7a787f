"""Beta numbers of explicit sets and polylines, and curve -> constriction.

Width measurements clip the set to the closed tripled box of a cube and take
the minimal enclosing cylinder of the clipped pieces; for polylines the width
of the clipped pieces equals the width of the convex hull of clipped-segment
endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import dyadic
from .constriction import Constriction, persistify
from .dyadic import DyadicCube
from .exact_geometry import (
    Point,
    RationalCylinder,
    as_point,
    dist2,
    empty_cylinder,
    format_rat,
    min_enclosing_cylinder_2d,
    min_enclosing_cylinder_nd,
    parse_rat,
    rat_sqrt_above,
)


@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear curve f([0,1]) given by >= 2 vertices, consecutive distinct."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(as_point(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise ValueError("polyline needs at least two vertices")
        for a, b in zip(verts, verts[1:]):
            if a == b:
                raise ValueError("consecutive vertices must be distinct")

    @property
    def n(self) -> int:
        return len(self.vertices[0])

    def segments(self) -> list:
        return list(zip(self.vertices, self.vertices[1:]))

    def length(self) -> float:
        return sum(math.sqrt(float(dist2(a, b))) for a, b in self.segments())

    def bbox(self):
        lo = tuple(min(v[i] for v in self.vertices) for i in range(self.n))
        hi = tuple(max(v[i] for v in self.vertices) for i in range(self.n))
        return lo, hi

    def to_json(self) -> dict:
        return {"n": self.n, "vertices": [[format_rat(c) for c in v] for v in self.vertices]}

    @classmethod
    def from_json(cls, obj: dict) -> "Polyline":
        return cls(tuple(tuple(parse_rat(str(c)) for c in v) for v in obj["vertices"]))

    @classmethod
    def from_csv(cls, text: str) -> "Polyline":
        rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
        return cls(tuple(tuple(parse_rat(c) for c in row.split(",")) for row in rows))


def clip_segment_to_box(a: Point, b: Point, lo: Point, hi: Point):
    """Exact clip of segment [a,b] to a closed box; None if disjoint."""
    t0, t1 = Fraction(0), Fraction(1)
    d = tuple(bb - aa for aa, bb in zip(a, b))
    for i in range(len(a)):
        if d[i] == 0:
            if a[i] < lo[i] or a[i] > hi[i]:
                return None
            continue
        ta = (lo[i] - a[i]) / d[i]
        tb = (hi[i] - a[i]) / d[i]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    pa = tuple(aa + t0 * dd for aa, dd in zip(a, d))
    pb = tuple(aa + t1 * dd for aa, dd in zip(a, d))
    return pa, pb


def _clip_points(obj, q: DyadicCube) -> list:
    """Points describing obj clipped to the closed 3Q box."""
    lo, hi = dyadic.triple_bounds(q)
    pts = []
    if isinstance(obj, Polyline):
        segs = obj.segments()
    elif obj and isinstance(obj[0], tuple) and obj and not isinstance(obj[0][0], tuple):
        # plain point list
        return [p for p in (as_point(p) for p in obj)
                if all(l <= c <= h for l, c, h in zip(lo, p, hi))]
    else:
        segs = [(as_point(a), as_point(b)) for a, b in obj]
    for a, b in segs:
        got = clip_segment_to_box(a, b, lo, hi)
        if got is not None:
            pts.extend(got)
    return list(dict.fromkeys(pts))


def width2_of_points(pts: Sequence[Point]):
    """Exact (n=2) or upper-bound (n>=3) squared half-width with an axis."""
    if not pts:
        return None, Fraction(0)
    n = len(pts[0])
    if n == 2:
        axis, rho2 = min_enclosing_cylinder_2d(pts)
    else:
        axis, rho2 = min_enclosing_cylinder_nd(pts)
    return axis, rho2


def beta2_of_set(obj, q: DyadicCube) -> Fraction:
    """Exact squared beta number rho2 / l(Q)^2 of a set clipped to 3Q."""
    pts = _clip_points(obj, q)
    if not pts:
        return Fraction(0)
    _, rho2 = width2_of_points(pts)
    side = q.side()
    return rho2 / (side * side)


def beta_of_set(obj, q: DyadicCube) -> float:
    """Beta number of the clipped set; float since it involves a square root."""
    return math.sqrt(float(beta2_of_set(obj, q)))


def _cubes_meeting(f: Polyline, m: int) -> list:
    """Order-m cubes whose closed 3Q meets the polyline, deduplicated, sorted."""
    side = Fraction(2) ** (-m)
    out = {}
    for a, b in f.segments():
        lo = tuple(min(aa, bb) - side for aa, bb in zip(a, b))
        hi = tuple(max(aa, bb) + side for aa, bb in zip(a, b))
        for q in dyadic.grid_cubes(lo, hi, m):
            key = q.corner
            if key in out:
                continue
            t_lo, t_hi = dyadic.triple_bounds(q)
            if clip_segment_to_box(a, b, t_lo, t_hi) is not None:
                out[key] = q
    return [out[k] for k in sorted(out)]


@dataclass
class PolylineBeta:
    total: Fraction
    per_order: dict
    tail_bound: Optional[float]


def beta2_polyline_truncated(f: Polyline, m_coarse: int, m_fine: int,
                             with_tail: bool = True) -> PolylineBeta:
    """Exact truncated square-beta sum of a polyline over an order range."""
    per_order = {}
    total = Fraction(0)
    for m in range(m_coarse, m_fine + 1):
        contrib = Fraction(0)
        for q in _cubes_meeting(f, m):
            contrib += beta2_of_set(f, q) * q.side()
        per_order[m] = contrib
        total += contrib
    tail = None
    if with_tail:
        try:
            tail = tail_bound_polyline(f, m_fine)
        except ValueError:
            tail = None
    return PolylineBeta(total=total, per_order=per_order, tail_bound=tail)


def tail_bound_polyline(f: Polyline, m_fine: int) -> float:
    """Upper bound on the square-beta sum over all orders beyond m_fine.

    Beyond a scale where each tripled cube sees at most one vertex, the only
    nonzero contributions come from vertex cubes: at most 4^n per vertex per
    order, each at most beta_max^2 * l with beta_max = 3*sqrt(n)/2.  Geometric
    series in closed form.
    """
    n = f.n
    interior = f.vertices[1:-1]
    sep2_bound = Fraction(9 * n, 4 ** m_fine)  # (3 sqrt(n) 2^-m_fine)^2
    verts = list(f.vertices)
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            if dist2(verts[i], verts[j]) <= sep2_bound:
                raise ValueError(
                    f"order {m_fine} too coarse: vertices {i} and {j} share a tripled cube; refine m_fine"
                )
    v_count = len(interior)
    beta_max2 = 9 * n / 4
    return v_count * (4 ** n) * beta_max2 * 2.0 ** (-m_fine)


def _count_cubes_meeting_bbox(lo: Point, hi: Point, m: int) -> int:
    """Number of order-m cubes whose closed 3Q meets the closed box [lo, hi]."""
    scale = Fraction(2) ** m
    total = 1
    for l, h in zip(lo, hi):
        low = l * scale - 2
        high = h * scale + 1
        i_min = -((-low.numerator) // low.denominator)  # ceil
        i_max = high.numerator // high.denominator      # floor
        total *= max(0, i_max - i_min + 1)
    return total


def segments_constriction(segments, n: int, eps: Fraction, depth: int,
                          coarse_order: int = -4, bounds=None,
                          label: str = "segments") -> Constriction:
    """Constriction permitting a finite union of segments, beta-close to it.

    Each cube up to `depth` gets the minimal enclosing cylinder of the clipped
    segments, with the radius inflated to a rational; the total inflation of
    the square-beta sum stays below eps via per-order uniform budgets.  Cubes
    with an empty clip map to the empty cylinder; deeper cubes inherit their
    parent's cylinder.  The result is persistent.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    segs = [(as_point(a), as_point(b)) for a, b in segments]
    empty = empty_cylinder(n)
    lo = tuple(min(min(a[i], b[i]) for a, b in segs) for i in range(n))
    hi = tuple(max(max(a[i], b[i]) for a, b in segs) for i in range(n))

    def allowance(order: int) -> Fraction:
        k = order - coarse_order
        n_cubes = max(1, _count_cubes_meeting_bbox(lo, hi, order))
        return eps / (Fraction(2) ** (k + 1)) / n_cubes

    def ev(q: DyadicCube) -> RationalCylinder:
        if q.order > depth:
            return ev(dyadic.parent(q))
        t_lo, t_hi = dyadic.triple_bounds(q)
        pts = []
        for a, b in segs:
            got = clip_segment_to_box(a, b, t_lo, t_hi)
            if got is not None:
                pts.extend(got)
        if not pts:
            return empty
        pts = list(dict.fromkeys(pts))
        axis, rho2 = width2_of_points(pts)
        budget = allowance(q.order) * q.side()  # cap on rho^2 - rho2_exact
        bits = 12
        while True:
            rho = rat_sqrt_above(rho2, bits)
            if rho * rho - rho2 <= budget:
                break
            bits += 8
        return RationalCylinder(axis[0], axis[1], rho)

    raw = Constriction(ev, n, coarse_order, bounds, label)
    return persistify(raw)


def derive_constriction(f: Polyline, eps: Fraction, depth: int,
                        coarse_order: int = -4, bounds=None) -> Constriction:
    """Constriction permitting a polyline with square-beta excess below eps."""
    return segments_constriction(f.segments(), f.n, eps, depth,
                                 coarse_order=coarse_order, bounds=bounds,
                                 label="polyline")
