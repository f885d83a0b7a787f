"""Exact rational points, cylinders, widths, and the narrow-cylinder slack bound.

Everything structural (membership, widths, comparisons) is exact over Q.
Lengths, which involve square roots, are computed in binary floating point
with relative tolerance TOL; callers compare squared quantities when they
need exactness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction
Point = tuple  # tuple[Fraction, ...]

#: relative tolerance for floating-point length comparisons (2**-40)
TOL = 2.0 ** -40


class DimensionError(ValueError):
    """Operands live in different ambient dimensions."""


# ---------------------------------------------------------------------------
# rationals


def rat(x) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return parse_rat(x)
    return Fraction(x)


def parse_rat(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def format_rat(q: Fraction) -> str:
    """Serialize as 'num/den', den omitted when 1."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def rat_sqrt_above(q: Fraction, bits: int = 24) -> Fraction:
    """Rational r >= sqrt(q) with r - sqrt(q) <= 2^-bits.  Requires q >= 0."""
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return Fraction(0)
    scale = 1 << bits
    target = q * scale * scale
    num, den = target.numerator, target.denominator
    # ceil(sqrt(num/den)) = ceil(sqrt(num*den)) / den
    root = math.isqrt(num * den)
    if root * root < num * den:
        root += 1
    return Fraction(root, den * scale)


def rat_sqrt_below(q: Fraction, bits: int = 24) -> Fraction:
    """Rational r <= sqrt(q) with sqrt(q) - r <= 2^-bits."""
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return Fraction(0)
    scale = 1 << bits
    target = q * scale * scale
    num, den = target.numerator, target.denominator
    root = math.isqrt(num * den)
    return Fraction(root, den * scale)


def cmp_sq_slopped(d2: Fraction, base: Fraction, coeff: Fraction, nn: int, r: int) -> int:
    """Exact sign of d2 - (base + coeff*sqrt(nn)*2^-r)^2.

    base, coeff rational (coeff may be negative); nn a positive integer whose
    square root is the only irrationality.  Returns -1, 0, or +1.
    """
    sigma2 = Fraction(nn, 1) / (Fraction(4) ** r)
    lhs = d2 - base * base - coeff * coeff * sigma2
    k = 2 * base * coeff / (Fraction(2) ** r)  # rhs = k * sqrt(nn)
    if k == 0:
        return (lhs > 0) - (lhs < 0)
    if k > 0:
        if lhs <= 0:
            return -1
        return (lhs * lhs > k * k * nn) - (lhs * lhs < k * k * nn)
    # k < 0: rhs negative
    if lhs >= 0:
        return 1
    return (k * k * nn > lhs * lhs) - (k * k * nn < lhs * lhs)


# ---------------------------------------------------------------------------
# points


def as_point(coords: Iterable) -> Point:
    return tuple(rat(c) for c in coords)


def vsub(a: Point, b: Point) -> Point:
    if len(a) != len(b):
        raise DimensionError(f"{len(a)} vs {len(b)}")
    return tuple(x - y for x, y in zip(a, b))


def vadd(a: Point, b: Point) -> Point:
    return tuple(x + y for x, y in zip(a, b))


def vscale(a: Point, s: Fraction) -> Point:
    return tuple(x * s for x in a)


def vdot(a: Point, b: Point) -> Fraction:
    if len(a) != len(b):
        raise DimensionError(f"{len(a)} vs {len(b)}")
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def dist2(a: Point, b: Point) -> Fraction:
    d = vsub(a, b)
    return vdot(d, d)


def dist(a: Point, b: Point) -> float:
    return math.sqrt(float(dist2(a, b)))


def point_float(a: Point) -> tuple:
    return tuple(float(c) for c in a)


# ---------------------------------------------------------------------------
# cylinders


@dataclass(frozen=True)
class RationalCylinder:
    """Infinite closed cylinder: axis through p with direction d, radius rho.

    rho < 0 encodes the empty set; rho == 0 the axis line itself.
    """

    p: Point
    d: Point
    rho: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", as_point(self.p))
        object.__setattr__(self, "d", as_point(self.d))
        object.__setattr__(self, "rho", rat(self.rho))
        if len(self.p) != len(self.d):
            raise DimensionError("anchor and direction dimensions differ")
        if self.rho >= 0 and all(c == 0 for c in self.d):
            raise ValueError("nonempty cylinder needs a nonzero direction")

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def empty(self) -> bool:
        return self.rho < 0

    def key(self):
        return (self.p, self.d, self.rho)

    def to_json(self) -> dict:
        return {
            "p": [format_rat(c) for c in self.p],
            "d": [format_rat(c) for c in self.d],
            "rho": format_rat(self.rho),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RationalCylinder":
        return cls(as_point(obj["p"]), as_point(obj["d"]), rat(obj["rho"]))


def empty_cylinder(n: int) -> RationalCylinder:
    return RationalCylinder(tuple([Fraction(0)] * n), tuple([Fraction(1)] + [Fraction(0)] * (n - 1)), Fraction(-1))


def full_cylinder(n: int, rho: Fraction = Fraction(4)) -> RationalCylinder:
    """Axis-aligned cylinder wide enough to contain the unit cube region."""
    return RationalCylinder(tuple([Fraction(0)] * n), tuple([Fraction(1)] + [Fraction(0)] * (n - 1)), rat(rho))


@dataclass(frozen=True)
class Segment:
    a: Point
    b: Point


def dist2_point_line(x: Point, p: Point, d: Point) -> Fraction:
    """Exact squared distance from x to the line {p + t d}."""
    w = vsub(x, p)
    dd = vdot(d, d)
    if dd == 0:
        raise ValueError("degenerate direction")
    proj = vdot(w, d)
    return vdot(w, w) - proj * proj / dd


def cyl_contains(c: RationalCylinder, x: Point) -> bool:
    """Closed membership test; exact, no square roots."""
    if len(x) != c.n:
        raise DimensionError(f"point dim {len(x)} vs cylinder dim {c.n}")
    if c.rho < 0:
        return False
    return dist2_point_line(x, c.p, c.d) <= c.rho * c.rho


def line_cube_dist2(p: Point, d: Point, cube_min: Point, cube_max: Point) -> Fraction:
    """Exact min squared distance between the line {p+td} and a closed box.

    The map t -> dist^2 is piecewise quadratic; pieces change only where a
    coordinate of p+td crosses a slab bound.  Evaluate breakpoints, interval
    midpoints, and per-piece quadratic vertices.
    """
    if all(c == 0 for c in d):
        raise ValueError("degenerate direction")
    n = len(p)
    if not (len(d) == len(cube_min) == len(cube_max) == n):
        raise DimensionError("mixed dimensions")
    breaks = set()
    for i in range(n):
        if d[i] != 0:
            breaks.add((cube_min[i] - p[i]) / d[i])
            breaks.add((cube_max[i] - p[i]) / d[i])
    ts = sorted(breaks)

    def at(t: Fraction) -> Fraction:
        total = Fraction(0)
        for i in range(n):
            v = p[i] + t * d[i]
            if v < cube_min[i]:
                g = cube_min[i] - v
            elif v > cube_max[i]:
                g = v - cube_max[i]
            else:
                continue
            total += g * g
        return total

    cands = list(ts)
    if not ts:
        cands.append(Fraction(0))
    else:
        cands.append(ts[0] - 1)
        cands.append(ts[-1] + 1)
        for a, b in zip(ts, ts[1:]):
            cands.append((a + b) / 2)
    # per-interval quadratic vertex: active coordinates are those outside
    # their slab at the interval midpoint
    intervals = []
    if ts:
        intervals.append((ts[0] - 2, ts[0]))
        for a, b in zip(ts, ts[1:]):
            intervals.append((a, b))
        intervals.append((ts[-1], ts[-1] + 2))
    for lo, hi in intervals:
        mid = (lo + hi) / 2
        a2 = Fraction(0)
        a1 = Fraction(0)
        for i in range(n):
            v = p[i] + mid * d[i]
            if v < cube_min[i]:
                # g = cube_min - p - t d
                a2 += d[i] * d[i]
                a1 += -2 * d[i] * (cube_min[i] - p[i])
            elif v > cube_max[i]:
                a2 += d[i] * d[i]
                a1 += -2 * d[i] * (cube_max[i] - p[i])
        if a2 > 0:
            vert = -a1 / (2 * a2)
            if lo < vert < hi:
                cands.append(vert)
    return min(at(t) for t in cands)


def line_box_hits(p: Point, d: Point, cube_min: Point, cube_max: Point) -> bool:
    """Exact test whether the line {p+td} meets a closed box (slab clipping)."""
    t0 = None
    t1 = None
    for i in range(len(p)):
        if d[i] == 0:
            if p[i] < cube_min[i] or p[i] > cube_max[i]:
                return False
            continue
        ta = (cube_min[i] - p[i]) / d[i]
        tb = (cube_max[i] - p[i]) / d[i]
        if ta > tb:
            ta, tb = tb, ta
        if t0 is None or ta > t0:
            t0 = ta
        if t1 is None or tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


def cyl_meets_box(c: RationalCylinder, cube_min: Point, cube_max: Point) -> bool:
    """Closed intersection test between a cylinder and a box.

    Cheap exact clip tests decide the common cases (axis through the box, or
    axis missing even the rho-inflated box); only boundary cases fall back to
    the full piecewise-quadratic minimization.
    """
    rho = c.rho
    if rho < 0:
        return False
    if line_box_hits(c.p, c.d, cube_min, cube_max):
        return True
    if rho == 0:
        return False
    # the axis misses the box; if it also misses the rho-inflated box, the
    # distance exceeds rho in some single coordinate already
    lo = tuple(v - rho for v in cube_min)
    hi = tuple(v + rho for v in cube_max)
    if not line_box_hits(c.p, c.d, lo, hi):
        return False
    return line_cube_dist2(c.p, c.d, cube_min, cube_max) <= rho * rho


def _clear_denominators(v: Point):
    den = 1
    for c in v:
        den = den * c.denominator // math.gcd(den, c.denominator)
    return [int(c * den) for c in v], den


class CylBoxTester:
    """Exact cylinder-vs-dyadic-box tests over plain integers.

    Precomputes integer forms of the axis so the common accept/reject cases
    (axis through the box, axis missing even the rho-inflated box) cost a few
    dozen integer operations; only the remaining boundary ring falls back to
    the rational piecewise-quadratic minimization.
    """

    #: absolute slack for the float screen; far above accumulated rounding
    #: error at the coordinate scales in play, so screened verdicts are sound
    FLOAT_MARGIN = 1e-9

    def __init__(self, cyl: RationalCylinder):
        self.cyl = cyl
        self.rho = cyl.rho
        self.rho2 = cyl.rho * cyl.rho
        if cyl.rho >= 0:
            self.pn, self.pd = _clear_denominators(cyl.p)
            self.dn, self.dd = _clear_denominators(cyl.d)
            self._pf = tuple(float(c) for c in cyl.p)
            norm = math.sqrt(sum(float(c) * float(c) for c in cyl.d))
            self._df = tuple(float(c) / norm for c in cyl.d)
            self._rho_f = float(cyl.rho)
        self.rn = self.rho.numerator
        self.rd = self.rho.denominator

    def _screen(self, lo, hi, den: int):
        """Float verdict for box [lo/den, hi/den]: True/False when certain."""
        inv = 0.5 / den
        pf = self._pf
        df = self._df
        proj = 0.0
        ww = 0.0
        hh = 0.0
        for i in range(len(lo)):
            w = (lo[i] + hi[i]) * inv - pf[i]
            half = (hi[i] - lo[i]) * inv
            proj += w * df[i]
            ww += w * w
            hh += half * half
        dist = math.sqrt(max(0.0, ww - proj * proj))
        if dist + self.FLOAT_MARGIN < self._rho_f:
            return True
        if dist - math.sqrt(hh) > self._rho_f + self.FLOAT_MARGIN:
            return False
        return None

    def _dist_screen(self, lo, hi, den: int):
        """Float line-box distance verdict; None inside the error band."""
        inv = 1.0 / den
        pf = self._pf
        df = self._df
        n = len(lo)
        los = [lo[i] * inv for i in range(n)]
        his = [hi[i] * inv for i in range(n)]
        breaks = []
        for i in range(n):
            if df[i] != 0.0:
                breaks.append((los[i] - pf[i]) / df[i])
                breaks.append((his[i] - pf[i]) / df[i])
        breaks.sort()

        def at(t):
            s = 0.0
            for i in range(n):
                v = pf[i] + t * df[i]
                if v < los[i]:
                    g = los[i] - v
                elif v > his[i]:
                    g = v - his[i]
                else:
                    continue
                s += g * g
            return s

        cands = list(breaks)
        if breaks:
            cands.append(breaks[0] - 1.0)
            cands.append(breaks[-1] + 1.0)
            for a, b in zip(breaks, breaks[1:]):
                cands.append(0.5 * (a + b))
        else:
            cands.append(0.0)
        intervals = []
        if breaks:
            intervals.append((breaks[0] - 2.0, breaks[0]))
            intervals.extend(zip(breaks, breaks[1:]))
            intervals.append((breaks[-1], breaks[-1] + 2.0))
        for a, b in intervals:
            mid = 0.5 * (a + b)
            a2 = a1 = 0.0
            for i in range(n):
                v = pf[i] + mid * df[i]
                if v < los[i]:
                    a2 += df[i] * df[i]
                    a1 += -2.0 * df[i] * (los[i] - pf[i])
                elif v > his[i]:
                    a2 += df[i] * df[i]
                    a1 += -2.0 * df[i] * (his[i] - pf[i])
            if a2 > 0.0:
                vert = -a1 / (2.0 * a2)
                if a < vert < b:
                    cands.append(vert)
        d2 = min(at(t) for t in cands)
        dist = math.sqrt(max(0.0, d2))
        if dist + self.FLOAT_MARGIN < self._rho_f:
            return True
        if dist - self.FLOAT_MARGIN > self._rho_f:
            return False
        return None

    def _hits_scaled(self, lo, hi, den: int) -> bool:
        """Line meets the closed box prod [lo_i/den, hi_i/den]."""
        pn, pd, dn = self.pn, self.pd, self.dn
        t0n = t0d = t1n = t1d = None  # running max/min as fractions n/d, d > 0
        for i in range(len(pn)):
            if dn[i] == 0:
                v = pn[i] * den
                if v < lo[i] * pd or v > hi[i] * pd:
                    return False
                continue
            na = lo[i] * pd - pn[i] * den
            nb = hi[i] * pd - pn[i] * den
            md = den * pd * dn[i]
            if md < 0:
                na, nb, md = -nb, -na, -md
            # candidate interval [na/md, nb/md]
            if t0n is None or na * t0d > t0n * md:
                t0n, t0d = na, md
            if t1n is None or nb * t1d < t1n * md:
                t1n, t1d = nb, md
            if t0n * t1d > t1n * t0d:
                return False
        return True

    def meets_box_ints(self, lo, hi, r: int) -> bool:
        """Cylinder meets the closed box prod [lo_i/2^r, hi_i/2^r]."""
        if self.rho < 0:
            return False
        den = 1 << r if r >= 0 else 1
        if r < 0:
            lo = [c << (-r) for c in lo]
            hi = [c << (-r) for c in hi]
        screened = self._screen(lo, hi, den)
        if screened is not None:
            return screened
        if self._hits_scaled(lo, hi, den):
            return True
        if self.rho == 0:
            return False
        rn, rd = self.rn, self.rd
        lo2 = [c * rd - rn * den for c in lo]
        hi2 = [c * rd + rn * den for c in hi]
        if not self._hits_scaled(lo2, hi2, den * rd):
            return False
        screened = self._dist_screen(lo, hi, den)
        if screened is not None:
            return screened
        scale = Fraction(1, den)
        lo_q = tuple(Fraction(c) * scale for c in lo)
        hi_q = tuple(Fraction(c) * scale for c in hi)
        return line_cube_dist2(self.cyl.p, self.cyl.d, lo_q, hi_q) <= self.rho2


# ---------------------------------------------------------------------------
# widths / minimal enclosing cylinders


def _orient(o: Point, a: Point, b: Point) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: Sequence[Point]) -> list:
    """Monotone-chain hull, counterclockwise, no duplicate endpoints."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower = []
    for pt in pts:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper = []
    for pt in reversed(pts):
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return lower[:-1] + upper[:-1]


def min_enclosing_cylinder_2d(points: Sequence[Point]):
    """Minimum-width strip of a planar point set.

    Returns ((axis_point, axis_direction), rho2) with rho2 the exact squared
    radius (half-width squared).  The optimal strip direction is parallel to
    a convex-hull edge, so we sweep hull edges.
    """
    pts = [as_point(p) for p in points]
    if not pts:
        raise ValueError("empty point set")
    if any(len(p) != 2 for p in pts):
        raise DimensionError("min_enclosing_cylinder_2d needs n=2")
    hull = convex_hull_2d(pts)
    if len(hull) == 1:
        return (hull[0], (Fraction(1), Fraction(0))), Fraction(0)
    if len(hull) == 2:
        u = vsub(hull[1], hull[0])
        return (hull[0], u), Fraction(0)
    best = None
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        u = vsub(b, a)
        nrm = (-u[1], u[0])
        nn = vdot(nrm, nrm)
        cs = [vdot(nrm, vsub(q, a)) for q in pts]
        cmin, cmax = min(cs), max(cs)
        rho2 = (cmax - cmin) ** 2 / (4 * nn)
        if best is None or rho2 < best[0]:
            mid = (cmin + cmax) / 2
            anchor = vadd(a, vscale(nrm, mid / nn))
            best = (rho2, (anchor, u))
    return best[1], best[0]


def _primitive_direction(v: Point):
    """Scale a rational vector to a canonical primitive integer tuple."""
    den = 1
    for c in v:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in v]
    g = 0
    for c in ints:
        g = math.gcd(g, abs(c))
    if g == 0:
        return None
    ints = [c // g for c in ints]
    for c in ints:
        if c != 0:
            if c < 0:
                ints = [-x for x in ints]
            break
    return tuple(ints)


def min_enclosing_cylinder_nd(points: Sequence[Point], candidates: int = 64):
    """Upper bound on the minimal enclosing-cylinder squared radius, n >= 3.

    Evaluates candidate axis directions: point-pair differences (deterministic
    order, first `candidates` distinct) plus the dominant direction of the
    centered second-moment matrix rounded to rationals.  Anchored at the
    centroid, so the result is an upper bound, non-increasing in `candidates`.
    """
    pts = [as_point(p) for p in points]
    if not pts:
        raise ValueError("empty point set")
    n = len(pts[0])
    m = len(pts)
    centroid = tuple(sum((p[i] for p in pts), Fraction(0)) / m for i in range(n))
    dirs = []
    seen = set()
    for i in range(m):
        for j in range(i + 1, m):
            prim = _primitive_direction(vsub(pts[j], pts[i]))
            if prim is not None and prim not in seen:
                seen.add(prim)
                dirs.append(tuple(Fraction(c) for c in prim))
                if len(dirs) >= candidates:
                    break
        if len(dirs) >= candidates:
            break
    moment = _moment_direction(pts, centroid)
    if moment is not None and _primitive_direction(moment) not in seen:
        dirs.append(moment)
    if not dirs:
        # all points coincide
        axis = tuple([Fraction(1)] + [Fraction(0)] * (n - 1))
        return (centroid, axis), Fraction(0)
    best = None
    for d in dirs:
        r2 = max(dist2_point_line(p, centroid, d) for p in pts)
        if best is None or r2 < best[0]:
            best = (r2, d)
    return (centroid, best[1]), best[0]


def _moment_direction(pts, centroid):
    """Best-fit direction of the centered second-moment matrix, rationalized."""
    import numpy as np

    arr = np.array([[float(c) for c in vsub(p, centroid)] for p in pts])
    if not arr.any():
        return None
    cov = arr.T @ arr
    vals, vecs = np.linalg.eigh(cov)
    top = vecs[:, -1]
    out = tuple(Fraction(float(c)).limit_denominator(1 << 16) for c in top)
    if all(c == 0 for c in out):
        return None
    return out


# ---------------------------------------------------------------------------
# narrow-cylinder slack


@dataclass
class ChainSlack:
    slack: float
    bound: float
    beta: float
    precondition_flags: list

    @property
    def holds(self) -> bool:
        return self.slack <= self.bound + TOL * max(1.0, abs(self.bound))


def narrow_chain_slack(lengths_ab: Sequence, c, l, w, A: int, n: int = 2) -> ChainSlack:
    """Slack of a segment chain against the narrow-cylinder bound 2*A*beta^2*l.

    lengths_ab are the chain's segment lengths, c the closing (long) segment,
    l and w the enclosing cylinder's length and width, beta = w/l.  For the
    triangle case w is the cylinder width; for longer chains callers should
    pass the transverse total variation as w (see module tests).  Precondition
    violations are flagged, never raised; the numbers are still returned for
    diagnostics.
    """
    lengths = [float(x) for x in lengths_ab]
    c = float(c)
    l = float(l)
    w = float(w)
    flags = []
    if l <= 0:
        flags.append("nonpositive cylinder length")
        beta = 0.0
    else:
        beta = w / l
    if w >= l / (A ** 3 * math.sqrt(n)):
        flags.append("width not below l/(A^3 sqrt(n))")
    # infer the scale 2^-m from l = A * 2^(1-m)
    if l > 0 and A > 0:
        pow2 = l / (2 * A)  # 2^-m
        if lengths and (min(lengths) < pow2 * (1 - 1e-9) or max(lengths) > 2 * pow2 * (1 + 1e-9)):
            flags.append("segment lengths outside [2^-m, 2^(1-m)]")
        if c < 2 * pow2 * (1 - 1e-9):
            flags.append("closing segment shorter than 2^(1-m)")
    slack = sum(lengths) - c
    bound = 2 * A * beta * beta * l
    return ChainSlack(slack=slack, bound=bound, beta=beta, precondition_flags=flags)
