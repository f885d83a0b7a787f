"""Cylinder assignments: persistence, beta numbers, and the permitted-set sieve.

A constriction maps every dyadic cube to a rational cylinder.  The permitted
set consists of the points contained in the cylinder of every cube whose open
tripled interior they lie in; deciding exact membership is impossible in
general, so the sieve over-approximates it by surviving cubes at a finite
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

import numpy as np

from . import dyadic
from .dyadic import DyadicCube
from .exact_geometry import (
    CylBoxTester,
    Point,
    RationalCylinder,
    as_point,
    cyl_contains,
    cyl_meets_box,
    empty_cylinder,
    format_rat,
    rat,
)


class _TesterCache:
    """Per-cylinder-object integer test contexts (memoized evals reuse objects)."""

    def __init__(self):
        self._by_id: dict = {}

    def get(self, cyl: RationalCylinder) -> CylBoxTester:
        key = id(cyl)
        got = self._by_id.get(key)
        if got is None or got.cyl is not cyl:
            got = CylBoxTester(cyl)
            self._by_id[key] = got
        return got


class Constriction:
    """A pure, memoized cube -> cylinder assignment with a bounding region.

    eval_fn must be deterministic; evaluation never mutates anything visible.
    """

    def __init__(self, eval_fn: Callable[[DyadicCube], RationalCylinder], n: int,
                 coarse_order: int = -4, bounds=None, label: str = "constriction",
                 constant_cylinder: Optional[RationalCylinder] = None):
        self._eval = eval_fn
        self.n = n
        self.coarse_order = coarse_order
        if bounds is None:
            bounds = (tuple([Fraction(0)] * n), tuple([Fraction(1)] * n))
        self.bounds = (as_point(bounds[0]), as_point(bounds[1]))
        self.label = label
        # set when the assignment maps every cube to this one cylinder; the
        # sieve's per-ancestor conjunction then collapses to a single test
        self.constant_cylinder = constant_cylinder
        self._cache: dict = {}

    def cylinder(self, q: DyadicCube) -> RationalCylinder:
        key = (q.order, q.corner)
        got = self._cache.get(key)
        if got is None:
            got = self._eval(q)
            self._cache[key] = got
        return got

    def cylinder_at(self, order: int, corner) -> RationalCylinder:
        got = self._cache.get((order, corner))
        if got is None:
            got = self._eval(DyadicCube(order, corner))
            self._cache[(order, corner)] = got
        return got


@dataclass
class ConstrictionTable:
    """Finite, serializable constriction: explicit entries plus a tail rule."""

    n: int
    coarse_order: int
    bounds: tuple
    entries: dict  # (order, corner) -> RationalCylinder
    tail_rule: object = "full"  # "empty" | "full" | "inherit"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "coarse_order": self.coarse_order,
            "bounds": [[format_rat(c) for c in self.bounds[0]],
                       [format_rat(c) for c in self.bounds[1]]],
            "entries": [
                {"cube": DyadicCube(o, c).to_json(), "cylinder": cyl.to_json()}
                for (o, c), cyl in sorted(self.entries.items())
            ],
            "tail_rule": self.tail_rule,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConstrictionTable":
        entries = {}
        for e in obj["entries"]:
            q = DyadicCube.from_json(e["cube"])
            entries[(q.order, q.corner)] = RationalCylinder.from_json(e["cylinder"])
        return cls(
            n=int(obj["n"]),
            coarse_order=int(obj["coarse_order"]),
            bounds=(as_point(obj["bounds"][0]), as_point(obj["bounds"][1])),
            entries=entries,
            tail_rule=obj.get("tail_rule", "full"),
        )

    def as_constriction(self, label: str = "table") -> Constriction:
        full = RationalCylinder(
            tuple([Fraction(0)] * self.n),
            tuple([Fraction(1)] + [Fraction(0)] * (self.n - 1)),
            rat(max(8, 4 * self.n)),
        )
        empty = empty_cylinder(self.n)

        def ev(q: DyadicCube) -> RationalCylinder:
            got = self.entries.get((q.order, q.corner))
            if got is not None:
                return got
            if q.order <= self.coarse_order:
                return full
            if self.tail_rule == "full":
                return full
            if self.tail_rule == "empty":
                return empty
            if self.tail_rule == "inherit":
                return ev(dyadic.parent(q))
            raise ValueError(f"unknown tail rule {self.tail_rule!r}")

        return Constriction(ev, self.n, self.coarse_order, self.bounds, label)


@dataclass
class SieveResult:
    order: int
    surviving: list  # DyadicCube, lexicographic
    checked_orders: tuple  # (coarse, fine)


def _tripling_corners(corner, shift: int):
    """Corner indices a+delta at order (own - shift) whose open tripled
    interior contains the closed cube with the given corner indices."""
    options = []
    anchors = []
    for c in corner:
        a = c >> shift
        anchors.append(a)
        opts = [0]
        if c > (a << shift):
            opts.append(1)
        if c + 1 < ((a + 1) << shift):
            opts.append(-1)
        options.append(opts)
    out = [()]
    for a, opts in zip(anchors, options):
        out = [prefix + (a + o,) for prefix in out for o in opts]
    return out


def persistify(g: Constriction) -> Constriction:
    """Equivalent constriction that never assigns through a prohibited triple.

    If any ancestor's (persistified) cylinder misses a cube's closed 3Q box,
    the cube is reassigned the empty cylinder; the permitted set is unchanged.
    Evaluation walks the finite ancestor chain down from the coarse order.
    """
    empty = empty_cylinder(g.n)
    dead: dict = {}
    testers = _TesterCache()

    def is_dead(q: DyadicCube) -> bool:
        key = (q.order, q.corner)
        got = dead.get(key)
        if got is not None:
            return got
        if q.order <= g.coarse_order:
            dead[key] = False
            return False
        # closed 3Q box of q, integer numerators over 2^order
        t_lo = [c - 1 for c in q.corner]
        t_hi = [c + 2 for c in q.corner]
        if g.constant_cylinder is not None:
            verdict = not testers.get(g.constant_cylinder).meets_box_ints(t_lo, t_hi, q.order)
            dead[key] = verdict
            return verdict
        anc = dyadic.parent(q)
        if is_dead(anc):
            dead[key] = True
            return True
        verdict = False
        walk = anc
        while True:
            cyl = g.cylinder(walk)
            if not testers.get(cyl).meets_box_ints(t_lo, t_hi, q.order):
                verdict = True
                break
            if walk.order <= g.coarse_order:
                break
            walk = dyadic.parent(walk)
        dead[key] = verdict
        return verdict

    return Constriction(
        lambda q: empty if is_dead(q) else g.cylinder(q),
        g.n, g.coarse_order, g.bounds, f"persistent({g.label})",
        constant_cylinder=g.constant_cylinder,
    )


def beta_of(g: Constriction, q: DyadicCube) -> Fraction:
    """rho(Q)/l(Q); empty cylinders contribute 0 (they constrain nothing further)."""
    rho = g.cylinder(q).rho
    if rho < 0:
        return Fraction(0)
    return rho / q.side()


def beta2_truncated(g: Constriction, m_coarse: int, m_fine: int) -> Fraction:
    """Exact sum of beta^2 * l over cubes meeting bounds in the order range."""
    if m_coarse > m_fine:
        raise ValueError("m_coarse must not exceed m_fine")
    total = Fraction(0)
    lo, hi = g.bounds
    for m in range(m_coarse, m_fine + 1):
        for q in dyadic.grid_cubes(lo, hi, m):
            rho = g.cylinder(q).rho
            if rho > 0:
                total += rho * rho / q.side()
    return total


class SieveCache:
    """Incrementally refined sieve of surviving cubes for one constriction.

    A cube of order r survives when every coarser-or-equal cube whose open
    tripled interior contains it assigns a cylinder meeting its closed box.
    Survivors at order r+1 are children of survivors at order r, so refinement
    only ever inspects survivors' children.
    """

    def __init__(self, g: Constriction):
        self.g = g
        self._levels: dict = {}
        self._centers_np: dict = {}
        self._max_order: Optional[int] = None
        self._testers = _TesterCache()

    def _cube_alive(self, q: DyadicCube) -> bool:
        g = self.g
        r = q.order
        lo = list(q.corner)
        hi = [c + 1 for c in q.corner]
        if g.constant_cylinder is not None:
            return self._testers.get(g.constant_cylinder).meets_box_ints(lo, hi, r)
        seen = set()
        for j in range(r, g.coarse_order - 1, -1):
            shift = r - j
            for cand in _tripling_corners(q.corner, shift):
                cyl = g.cylinder_at(j, cand)
                key = id(cyl)
                if key in seen:
                    continue
                seen.add(key)
                if not self._testers.get(cyl).meets_box_ints(lo, hi, r):
                    return False
        return True

    def _box_meets_bounds(self, q: DyadicCube) -> bool:
        lo, hi = q.bounds()
        blo, bhi = self.g.bounds
        return all(l <= bh and h >= bl for l, h, bl, bh in zip(lo, hi, blo, bhi))

    def extend_to(self, r: int) -> None:
        g = self.g
        if self._max_order is None:
            base = [q for q in dyadic.grid_cubes(g.bounds[0], g.bounds[1], g.coarse_order)
                    if self._cube_alive(q)]
            self._levels[g.coarse_order] = base
            self._max_order = g.coarse_order
        while self._max_order < r:
            nxt = []
            for q in self._levels[self._max_order]:
                for child in dyadic.refine(q):
                    if self._box_meets_bounds(child) and self._cube_alive(child):
                        nxt.append(child)
            nxt.sort(key=lambda c: c.corner)
            self._max_order += 1
            self._levels[self._max_order] = nxt

    def survivors(self, r: int) -> list:
        if r < self.g.coarse_order:
            raise ValueError("order below the coarse order")
        self.extend_to(r)
        return self._levels[r]

    def survivor_set(self, r: int) -> set:
        return {(q.order, q.corner) for q in self.survivors(r)}

    def centers_np(self, r: int) -> np.ndarray:
        got = self._centers_np.get(r)
        if got is None or len(got) != len(self.survivors(r)):
            got = np.array([[float(c) for c in q.center()] for q in self.survivors(r)],
                           dtype=float).reshape(-1, self.g.n)
            self._centers_np[r] = got
        return got


def permitted_cubes(g: Constriction, r: int, cache: Optional[SieveCache] = None) -> SieveResult:
    """Sound over-approximation of the permitted set by order-r cubes."""
    if r < g.coarse_order:
        raise ValueError("r must be at least the coarse order")
    if cache is None:
        cache = SieveCache(g)
    return SieveResult(order=r, surviving=list(cache.survivors(r)),
                       checked_orders=(g.coarse_order, r))


def point_permitted_truncated(g: Constriction, x: Point, m_fine: int) -> bool:
    """Necessary condition for membership in the permitted set, up to m_fine.

    Conjunction of cylinder membership over every cube whose open tripled
    interior contains x, orders coarse..m_fine.  Monotone: deeper m_fine can
    only flip true to false.
    """
    x = as_point(x)
    for q in dyadic.enclosing_cubes(x, g.coarse_order, m_fine):
        if not cyl_contains(g.cylinder(q), x):
            return False
    return True
