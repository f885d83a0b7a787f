"""Builtin constrictions and example sets.

Includes the four-corner Cantor construction (quarter-size corner subsquares
selected by bit pairs), line and polyline constrictions, a seeded random
constriction with a hard cap on its truncated square-beta sum, and a
two-segment fixture whose detached spur exercises tip extension.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional, Sequence

from . import dyadic
from .constriction import Constriction, persistify
from .dyadic import DyadicCube
from .exact_geometry import (
    Point,
    RationalCylinder,
    as_point,
    empty_cylinder,
    full_cylinder,
    rat,
    rat_sqrt_above,
    rat_sqrt_below,
)
from .set_beta import Polyline, derive_constriction, segments_constriction, width2_of_points


QUARTER = Fraction(1, 4)
_CORNER = {(0, 0): (0, 0), (0, 1): (1, 0), (1, 0): (0, 1), (1, 1): (1, 1)}  # (a,b) -> (dx,dy)


def cantor4_squares(bits: Sequence[int], depth: Optional[int] = None) -> list:
    """Nested square chain A_0 .. A_depth selected by bit pairs.

    Bit pair (a, b) picks a corner: 00 lower left, 01 lower right, 10 upper
    left, 11 upper right; each square has a quarter of its parent's side.
    Returns a list of (corner, side) pairs.
    """
    bits = [int(b) for b in bits]
    if len(bits) % 2:
        raise ValueError("bit count must be even (two bits per level)")
    if depth is None:
        depth = len(bits) // 2
    if depth > len(bits) // 2:
        raise ValueError("not enough bits for the requested depth")
    lo = (Fraction(0), Fraction(0))
    side = Fraction(1)
    out = [(lo, side)]
    for k in range(depth):
        a, b = bits[2 * k], bits[2 * k + 1]
        dx, dy = _CORNER[(a, b)]
        lo = (lo[0] + dx * side * Fraction(3, 4), lo[1] + dy * side * Fraction(3, 4))
        side *= QUARTER
        out.append((lo, side))
    return out


def cantor4_point(bits: Sequence[int]) -> list:
    """The shrinking box chain of the point selected by a bit prefix."""
    return cantor4_squares(bits)


class Cantor4Level:
    """All 4^depth level squares of the four-corner construction, indexed."""

    def __init__(self, depth: int):
        if depth < 0:
            raise ValueError("depth must be nonnegative")
        self.depth = depth
        self.side = QUARTER ** depth
        los = [(Fraction(0), Fraction(0))]
        side = Fraction(1)
        for _ in range(depth):
            step = side * Fraction(3, 4)
            los = [
                (lo[0] + dx * step, lo[1] + dy * step)
                for lo in los
                for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1))
            ]
            side *= QUARTER
        self.squares = sorted(los)
        # bucket squares by their cell at the squares' own scale
        self._bucket_order = max(0, (self.side.denominator - 1).bit_length())
        scale = Fraction(2) ** self._bucket_order
        self._buckets: dict = {}
        for lo in self.squares:
            hi = (lo[0] + self.side, lo[1] + self.side)
            i0 = (lo[0] * scale).numerator // (lo[0] * scale).denominator
            j0 = (lo[1] * scale).numerator // (lo[1] * scale).denominator
            i1 = (hi[0] * scale).numerator // (hi[0] * scale).denominator
            j1 = (hi[1] * scale).numerator // (hi[1] * scale).denominator
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    self._buckets.setdefault((i, j), []).append(lo)

    def clipped_corners(self, box_lo: Point, box_hi: Point) -> list:
        """Corner points of level squares clipped to a closed box."""
        scale = Fraction(2) ** self._bucket_order
        i0 = (box_lo[0] * scale).numerator // (box_lo[0] * scale).denominator
        j0 = (box_lo[1] * scale).numerator // (box_lo[1] * scale).denominator
        i1 = (box_hi[0] * scale).numerator // (box_hi[0] * scale).denominator
        j1 = (box_hi[1] * scale).numerator // (box_hi[1] * scale).denominator
        cand = set()
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                for lo in self._buckets.get((i, j), ()):
                    cand.add(lo)
        pts = []
        for lo in sorted(cand):
            x0 = max(lo[0], box_lo[0])
            y0 = max(lo[1], box_lo[1])
            x1 = min(lo[0] + self.side, box_hi[0])
            y1 = min(lo[1] + self.side, box_hi[1])
            if x0 > x1 or y0 > y1:
                continue
            pts.extend([(x0, y0), (x1, y0), (x0, y1), (x1, y1)])
        return list(dict.fromkeys(pts))


def cantor4_beta_growth(depth: int, orders: Optional[Sequence[int]] = None) -> dict:
    """Per-order square-beta contributions of the level-depth Cantor set.

    Returns {order: exact contribution}; divergence of the full sum shows up
    as roughly constant per-order contributions here.
    """
    level = Cantor4Level(depth)
    if orders is None:
        orders = range(1, depth + 1)
    out = {}
    for m in orders:
        contrib = Fraction(0)
        for q in dyadic.grid_cubes((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1)), m):
            t_lo, t_hi = dyadic.triple_bounds(q)
            pts = level.clipped_corners(t_lo, t_hi)
            if not pts:
                continue
            _, rho2 = width2_of_points(pts)
            contrib += rho2 / q.side()
        out[m] = contrib
    return out


def cantor4_constriction(depth: int, coarse_order: int = -4) -> Constriction:
    """Constriction permitting the level-depth Cantor set (inflated widths)."""
    level = Cantor4Level(depth)
    empty = empty_cylinder(2)
    whole_pts = level.clipped_corners((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1)))
    axis, rho2 = width2_of_points(whole_pts)
    whole_cyl = RationalCylinder(axis[0], axis[1], rat_sqrt_above(rho2, 20))

    def ev(q: DyadicCube) -> RationalCylinder:
        t_lo, t_hi = dyadic.triple_bounds(q)
        if all(l <= 0 for l in t_lo) and all(h >= 1 for h in t_hi):
            return whole_cyl  # tripled box engulfs the whole level set
        pts = level.clipped_corners(t_lo, t_hi)
        if not pts:
            return empty
        axis, rho2 = width2_of_points(pts)
        if axis is None:
            return empty
        return RationalCylinder(axis[0], axis[1], rat_sqrt_above(rho2, 20))

    raw = Constriction(ev, 2, coarse_order, None, f"cantor4({depth})")
    return persistify(raw)


# ---------------------------------------------------------------------------
# seeded random constrictions


def _mix64(*vals: int) -> int:
    """Deterministic splitmix64-style hash of a tuple of integers."""
    h = 0x9E3779B97F4A7C15
    for v in vals:
        h ^= (v & 0xFFFFFFFFFFFFFFFF) + 0x9E3779B97F4A7C15 + ((h << 6) & 0xFFFFFFFFFFFFFFFF) + (h >> 2)
        h &= 0xFFFFFFFFFFFFFFFF
        h ^= h >> 30
        h = (h * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        h ^= h >> 27
        h = (h * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        h ^= h >> 31
    return h


def random_constriction(seed: int, budget: Fraction, n: int = 2, coarse_order: int = -4) -> Constriction:
    """Seeded diagonal-tube constriction with truncated square beta <= budget.

    Cubes whose tripled box meets the main diagonal get a cylinder along it
    whose radius is drawn (deterministically from the seed) below a per-order
    geometric envelope; everything else is empty.  The envelope divides the
    order budget by an upper bound on how many cubes can contribute, so the
    square-beta sum stays below the budget at every depth.
    """
    budget = rat(budget)
    if budget <= 0:
        raise ValueError("budget must be positive")
    origin = tuple([Fraction(0)] * n)
    diag = tuple([Fraction(1)] * n)

    def ev(q: DyadicCube) -> RationalCylinder:
        t_lo, t_hi = dyadic.triple_bounds(q)
        # closed 3Q meets the diagonal {t * (1,...,1)} iff the per-axis
        # parameter intervals overlap
        t0 = max(t_lo)
        t1 = min(t_hi)
        if t0 > t1:
            return empty_cylinder(n)
        j = q.order
        order_budget = budget / (Fraction(2) ** (j - coarse_order + 1))
        count_bound = (3 ** n) * (2 ** max(0, j) * n + 4)
        target = order_budget * q.side() / count_bound  # cap on rho^2 / l
        rho_max = rat_sqrt_below(target, 24)
        u = Fraction(_mix64(seed, j + 1 << 20, *[c & 0xFFFFFFFF for c in q.corner]) % 65536, 65536)
        rho = rho_max * (1 + u) / 2
        return RationalCylinder(origin, diag, rho)

    raw = Constriction(ev, n, coarse_order, None, f"random({seed})")
    return persistify(raw)


def diagonal_with_spur(n: int = 2, eps: Fraction = Fraction(1, 256), depth: int = 12) -> Constriction:
    """Diagonal plus a detached straight spur in the lower-right pocket.

    The spur's far tip extends the permitted set beyond the net frontier in a
    cone empty of older points once stage balls shrink below the pocket size,
    so synthesizing this fixture exercises tip extension (farthest insertion).
    """
    if n != 2:
        raise ValueError("fixture is planar")
    segs = [
        ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))),
        ((Fraction(25, 32), Fraction(9, 32)), (Fraction(31, 32), Fraction(3, 32))),
    ]
    return segments_constriction(segs, 2, eps, depth, label="diagonal+spur")


# ---------------------------------------------------------------------------
# builtins


BUILTIN_NAMES = ("diagonal-line", "axis-line", "polyline", "cantor4", "full", "empty")


def builtin(name: str, params: Optional[dict] = None, n: int = 2) -> Constriction:
    """Builtin constrictions addressable by name from tables and the CLI."""
    params = dict(params or {})
    if name == "diagonal-line":
        cyl = RationalCylinder(tuple([Fraction(0)] * n), tuple([Fraction(1)] * n), Fraction(0))
        return Constriction(lambda q: cyl, n, label="diagonal-line", constant_cylinder=cyl)
    if name == "axis-line":
        cyl = RationalCylinder(
            tuple([Fraction(0)] * n),
            tuple([Fraction(1)] + [Fraction(0)] * (n - 1)),
            Fraction(0),
        )
        return Constriction(lambda q: cyl, n, label="axis-line", constant_cylinder=cyl)
    if name == "full":
        cyl = full_cylinder(n, rho=rat(2 * n))
        return Constriction(lambda q: cyl, n, label="full", constant_cylinder=cyl)
    if name == "empty":
        cyl = empty_cylinder(n)
        return Constriction(lambda q: cyl, n, label="empty", constant_cylinder=cyl)
    if name == "cantor4":
        return cantor4_constriction(int(params.get("depth", 3)))
    if name == "polyline":
        f = params.get("polyline")
        if f is None:
            f = Polyline(tuple(as_point(v) for v in params["vertices"]))
        eps = rat(params.get("eps", Fraction(1, 256)))
        depth = int(params.get("depth", 10))
        return derive_constriction(f, eps, depth)
    raise ValueError(f"unknown builtin {name!r}")
