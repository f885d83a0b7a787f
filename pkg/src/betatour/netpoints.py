"""Net points with precision chains, the cone predicate, and C1/C2 checks.

Net points are specified by nested chains of surviving dyadic cubes; their
coordinates are the centers of the chain's deepest cube until refinement stops
(frozen points keep the last permitted coordinate).  Stage-m nets must be
pairwise separated by 2^-m minus the schedule slop (C1) and must cover every
surviving cube center within 2^-m plus slop (C2); both checks compare exact
squared distances against thresholds in Q[sqrt(n)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import dyadic
from .constriction import SieveCache
from .dyadic import DyadicCube
from .exact_geometry import Point, as_point, cmp_sq_slopped, dist2, vdot, vsub

_BAND = 1e-9  # float prefilter margin; inside it we fall back to exact tests


def cone_contains(z: Point, x: Point, y: Point) -> bool:
    """True iff the angle between y-z and x-z is at most 2*pi/3.  Exact."""
    w = vsub(x, z)
    if all(c == 0 for c in w):
        raise ValueError("cone apex direction undefined (x == z)")
    u = vsub(y, z)
    if all(c == 0 for c in u):
        return True
    dot = vdot(u, w)
    if dot >= 0:
        return True
    return 4 * dot * dot <= vdot(u, u) * vdot(w, w)


def angle_at_least_two_thirds_pi(u: Point, w: Point) -> bool:
    """True iff the angle between u and w is at least 2*pi/3.  Exact."""
    dot = vdot(u, w)
    if dot >= 0:
        return False
    return 4 * dot * dot >= vdot(u, u) * vdot(w, w)


@dataclass
class NetPoint:
    id: str
    chain: list  # [(stage, DyadicCube)], strictly nested cubes
    frozen: bool = False
    fixed: Optional[tuple] = None  # exact coordinate, never refined (anchors)
    birth_stage: int = 0

    @property
    def coord(self) -> Point:
        if self.fixed is not None:
            return self.fixed
        return self.chain[-1][1].center()

    @property
    def cube(self) -> DyadicCube:
        return self.chain[-1][1]


class Net:
    """The current stage's net: ordered points with coordinate lookups."""

    def __init__(self, points: Sequence[NetPoint], stage: int):
        self.points = list(points)
        self.stage = stage

    def __len__(self):
        return len(self.points)

    def ids(self) -> list:
        return [p.id for p in self.points]

    def coords(self) -> dict:
        return {p.id: p.coord for p in self.points}

    def coords_np(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 0))
        return np.array([[float(c) for c in p.coord] for p in self.points], dtype=float)

    def add(self, p: NetPoint) -> None:
        self.points.append(p)


def refine_point(p: NetPoint, cache: SieveCache, r_prev: int, r_new: int, stage: int) -> None:
    """Descend the chain to the stage's precision, freezing when prohibited.

    At each extra level the lexicographically first surviving child is taken;
    if no child survives, the point freezes and keeps its last coordinate.
    """
    if p.fixed is not None or p.frozen or r_new <= r_prev:
        return
    cur = p.chain[-1][1]
    for level in range(cur.order + 1, r_new + 1):
        alive = cache.survivor_set(level)
        nxt = None
        for child in dyadic.refine(cur):
            if (child.order, child.corner) in alive:
                nxt = child
                break
        if nxt is None:
            p.frozen = True
            return
        cur = nxt
    p.chain.append((stage, cur))


def _min_dist2_exact_ok(c: Point, others, base: Fraction, coeff: int, nn: int, r: int) -> bool:
    """Exact check: dist(c, o) >= / <= threshold for all/any, per coeff sign.

    coeff = -1 checks separation (all distances at least base - slop);
    used by the greedy selection fallback.
    """
    for o in others:
        if cmp_sq_slopped(dist2(c, o), base, Fraction(coeff), nn, r) < 0:
            return False
    return True


def select_net(survivor_cubes, survivor_centers_np: np.ndarray, prev_points: Sequence[NetPoint],
               m: int, r: int, n: int):
    """Greedy lexicographic completion of the previous net over sieve survivors.

    A surviving cube's center joins when it is at least 2^-m minus slop from
    every previous and every chosen point (exact on float-band ties).  Returns
    the chosen (cube, center) list in selection order; the result plus the
    previous net is maximal, hence 2^-m-covering.
    """
    base = Fraction(2) ** (-m)
    sep_f = float(base) - math.sqrt(n) * 2.0 ** (-r)
    sep2_f = sep_f * sep_f
    chosen = []
    chosen_exact = []
    prev_exact = [p.coord for p in prev_points]
    if prev_points:
        pool = np.array([[float(c) for c in p.coord] for p in prev_points])
    else:
        pool = np.zeros((0, n))
    for idx, q in enumerate(survivor_cubes):
        c_f = survivor_centers_np[idx]
        if len(pool):
            d2min = float(np.min(np.sum((pool - c_f) ** 2, axis=1)))
        else:
            d2min = math.inf
        if d2min < sep2_f - _BAND:
            continue
        center = q.center()
        if d2min < sep2_f + _BAND:
            # near the boundary: decide exactly
            if not _min_dist2_exact_ok(center, prev_exact + chosen_exact, base, -1, n, r):
                continue
        chosen.append((q, center))
        chosen_exact.append(center)
        pool = np.vstack([pool, c_f[None, :]]) if len(pool) else c_f[None, :].copy()
    return chosen


def check_c1(points: Sequence[NetPoint], m: int, r: int, n: int) -> list:
    """Exact pairwise separation check; returns violating id pairs."""
    base = Fraction(2) ** (-m)
    coords = [(p.id, p.coord) for p in points]
    arr = np.array([[float(c) for c in coord] for _, coord in coords]) if coords else np.zeros((0, n))
    sep_f = float(base) - math.sqrt(n) * 2.0 ** (-r)
    sep2_f = sep_f * sep_f
    bad = []
    for i in range(len(coords)):
        d2s = np.sum((arr[i + 1:] - arr[i]) ** 2, axis=1)
        for off in np.nonzero(d2s < sep2_f + _BAND)[0]:
            j = i + 1 + int(off)
            if cmp_sq_slopped(dist2(coords[i][1], coords[j][1]), base, Fraction(-1), n, r) < 0:
                bad.append((coords[i][0], coords[j][0]))
    return bad


def check_c2(points: Sequence[NetPoint], survivor_cubes, survivor_centers_np: np.ndarray,
             m: int, r: int, n: int) -> list:
    """Exact coverage check: every surviving center near some net point."""
    if not survivor_cubes:
        return []
    if not points:
        return [q for q in survivor_cubes]
    base = Fraction(2) ** (-m)
    coords = [p.coord for p in points]
    arr = np.array([[float(c) for c in coord] for coord in coords])
    bad = []
    for idx, q in enumerate(survivor_cubes):
        d2s = np.sum((arr - survivor_centers_np[idx]) ** 2, axis=1)
        order = np.argsort(d2s)
        center = None
        covered = False
        for k in order[:4]:
            center = q.center() if center is None else center
            if cmp_sq_slopped(dist2(center, coords[int(k)]), base, Fraction(1), n, r) <= 0:
                covered = True
                break
        if not covered:
            center = q.center()
            covered = any(
                cmp_sq_slopped(dist2(center, c), base, Fraction(1), n, r) <= 0 for c in coords
            )
        if not covered:
            bad.append(q)
    return bad


def closest_marked(z_from: Point, pool, radius=None, cone=None) -> list:
    """Pool members within radius of z_from, optionally cone-filtered, sorted.

    pool is an iterable of (id, point); sorting is by exact squared distance
    with id tie-break.  radius None means unbounded; cone is an optional
    (apex, direction_point) pair for the 2*pi/3 cone at the apex.
    """
    out = []
    r2 = None if radius is None else Fraction(radius) * Fraction(radius)
    for pid, pt in pool:
        d2 = dist2(pt, z_from)
        if r2 is not None and d2 > r2:
            continue
        if cone is not None and not cone_contains(cone[0], cone[1], pt):
            continue
        out.append((d2, pid, pt))
    out.sort(key=lambda t: (t[0], t[1]))
    return [(pid, pt) for _, pid, pt in out]
