"""Piecewise-linear tours with marked net points and an explicit-segment registry.

A tour is a continuous map [0,1] -> R^n stored as strictly increasing rational
breakpoint parameters.  Marked points (net points) own their breakpoints; the
registry counts how many times each geometric segment is traversed directly.
Patch operations return new tours and keep every segment's multiplicity <= 2.
"""

from __future__ import annotations

import bisect
import math
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .exact_geometry import Point, as_point, dist2, format_rat, parse_rat, rat, vdot, vsub

TWO = Fraction(2)


def seg_key(a: Point, b: Point):
    return (a, b) if a <= b else (b, a)


class TourError(ValueError):
    pass


class Tour:
    """Value-semantics tour; patch operations produce new tours."""

    __slots__ = ("breakpoints", "marks", "registry", "_params", "_adj")

    def __init__(self, breakpoints, marks, registry=None):
        # breakpoints: list of (param Fraction, point, owner or None)
        self.breakpoints = list(breakpoints)
        self.marks = dict(marks)
        if registry is None:
            registry = derive_registry(self.breakpoints)
        self.registry = dict(registry)
        self._params = None
        self._adj = None
        self._validate()

    # -- construction -------------------------------------------------------

    @classmethod
    def line(cls, a_id: str, a: Point, b_id: str, b: Point) -> "Tour":
        a, b = as_point(a), as_point(b)
        bps = [(Fraction(0), a, a_id), (Fraction(1), b, b_id)]
        return cls(bps, {a_id: Fraction(0), b_id: Fraction(1)})

    def _validate(self):
        if not self.breakpoints:
            raise TourError("empty tour")
        if self.breakpoints[0][0] != 0 or self.breakpoints[-1][0] != 1:
            raise TourError("parameter range must be exactly [0, 1]")
        prev = None
        for t, _, _ in self.breakpoints:
            if prev is not None and t <= prev:
                raise TourError("breakpoint parameters must strictly increase")
            prev = t

    def copy(self) -> "Tour":
        return Tour(self.breakpoints, self.marks, self.registry)

    # -- queries ------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.breakpoints[0][1])

    def params(self) -> list:
        if self._params is None:
            self._params = [t for t, _, _ in self.breakpoints]
        return self._params

    def point_of(self, mark_id: str) -> Point:
        return self.eval(self.marks[mark_id])

    def eval(self, t) -> Point:
        t = rat(t) if not isinstance(t, float) else Fraction(t)
        if t < 0 or t > 1:
            raise TourError(f"parameter {t} outside [0, 1]")
        params = self.params()
        i = bisect.bisect_right(params, t) - 1
        if i == len(params) - 1:
            return self.breakpoints[-1][1]
        t0, p0, _ = self.breakpoints[i]
        t1, p1, _ = self.breakpoints[i + 1]
        if t == t0:
            return p0
        lam = (t - t0) / (t1 - t0)
        return tuple(a + lam * (b - a) for a, b in zip(p0, p1))

    def length(self) -> float:
        total = 0.0
        for (_, p0, _), (_, p1, _) in zip(self.breakpoints, self.breakpoints[1:]):
            total += math.sqrt(float(dist2(p0, p1)))
        return total

    def length_squared_sum(self) -> Fraction:
        """Exact sum of squared segment lengths, for auditing."""
        total = Fraction(0)
        for (_, p0, _), (_, p1, _) in zip(self.breakpoints, self.breakpoints[1:]):
            total += dist2(p0, p1)
        return total

    def h1_distinct(self) -> float:
        """Sum of distinct explicit-segment lengths (overlaps not merged)."""
        return sum(math.sqrt(float(dist2(a, b))) for (a, b), m in self.registry.items() if m > 0)

    def max_multiplicity(self) -> int:
        return max(self.registry.values(), default=0)

    def _adjacency(self) -> dict:
        if self._adj is None:
            adj: dict = {}
            for (a, b), mult in self.registry.items():
                if mult > 0:
                    adj.setdefault(a, set()).add(b)
                    adj.setdefault(b, set()).add(a)
            self._adj = adj
        return self._adj

    def is_explicit(self, a: Point, b: Point) -> bool:
        """Whether [a, b] is traversed directly.

        Attach windows may split a direct segment into collinear pieces at
        unmarked breakpoints, so a monotone chain of registry edges along
        [a, b] counts as direct traversal too.
        """
        if self.registry.get(seg_key(a, b), 0) > 0:
            return True
        if a == b:
            return False
        adj = self._adjacency()
        if a not in adj or b not in adj:
            return False
        u = vsub(b, a)
        uu = vdot(u, u)
        cur = a
        frac = Fraction(0)
        for _ in range(len(self.registry) + 1):
            step = None
            for w in adj.get(cur, ()):
                s = self._segment_fraction(w, a, u, uu)
                if s is not None and s > frac and (step is None or s < step[0]):
                    step = (s, w)
            if step is None:
                return False
            frac, cur = step
            if cur == b:
                return True
        return False

    def explicit_partners(self, z: Point, coords: dict) -> list:
        """Marked ids whose segment to z is currently traversed directly."""
        out = []
        for mid, c in coords.items():
            if c != z and self.is_explicit(z, c):
                out.append(mid)
        return out

    # -- patch helpers ------------------------------------------------------

    def _insert_plain_breakpoint(self, bps, registry, t: Fraction) -> None:
        """Split a segment at parameter t (in place on the working lists)."""
        params = [b[0] for b in bps]
        i = bisect.bisect_left(params, t)
        if i < len(params) and params[i] == t:
            return
        t0, p0, _ = bps[i - 1]
        t1, p1, _ = bps[i]
        lam = (t - t0) / (t1 - t0)
        w = tuple(a + lam * (b - a) for a, b in zip(p0, p1))
        if p0 != p1:
            _dec(registry, seg_key(p0, p1))
            if w != p0:
                _inc(registry, seg_key(p0, w))
            if w != p1:
                _inc(registry, seg_key(w, p1))
        bps.insert(i, (t, w, None))

    def _window_is_clean(self, lo: Fraction, hi: Fraction, z_param: Fraction, z: Point) -> bool:
        """No other mark parameter and no other z-occurrence inside [lo, hi]."""
        for mid, p in self.marks.items():
            if lo <= p <= hi and p != z_param:
                return False
        for t, pt, _ in self.breakpoints:
            if lo <= t <= hi and pt == z and t != z_param:
                return False
        return True

    # -- attach -------------------------------------------------------------

    def attach(self, z_id: str, x_id: str, x: Point, m: int) -> "Tour":
        """Graft the out-and-back spur [z, x] at z's mark, locally in parameter.

        Finds a parameter window around z's mark small enough that the tour
        stays within 2^(1-m) of z on it and no other marked point lives there,
        compresses the two half-windows, and inserts z -> x -> z.  Supremum
        distance to the old tour is bounded by the window image diameter.
        """
        if z_id not in self.marks:
            raise TourError(f"attach: {z_id!r} is not marked")
        x = as_point(x)
        q = self.marks[z_id]
        z = self.eval(q)
        if x == z:
            raise TourError("attach: spur endpoint coincides with the anchor")
        thresh2 = (TWO ** (1 - m)) ** 2

        one_sided_left = q == 0
        one_sided_right = q == 1
        a = Fraction(1, 4)
        if not (one_sided_left or one_sided_right):
            lim = min(q, 1 - q) / 2
            while a > lim:
                a /= 2
        for _ in range(200):
            if one_sided_left:
                lo, hi = Fraction(0), 2 * a
                ok = dist2(self.eval(hi), z) < thresh2
            elif one_sided_right:
                lo, hi = 1 - 2 * a, Fraction(1)
                ok = dist2(self.eval(lo), z) < thresh2
            else:
                lo, hi = q - 2 * a, q + 2 * a
                ok = dist2(self.eval(lo), z) < thresh2 and dist2(self.eval(hi), z) < thresh2
            if ok and self._window_is_clean(lo, hi, q, z):
                break
            a /= 2
        else:
            raise TourError("attach: no admissible window found")

        bps = list(self.breakpoints)
        registry = dict(self.registry)
        self._insert_plain_breakpoint(bps, registry, lo)
        self._insert_plain_breakpoint(bps, registry, hi)

        prefix = [b for b in bps if b[0] < lo or (b[0] == lo and lo > 0)]
        # keep the boundary breakpoint at lo (and hi) exactly once
        prefix = [b for b in bps if b[0] <= lo]
        suffix = [b for b in bps if b[0] >= hi]
        inner = [b for b in bps if lo < b[0] < hi]
        if one_sided_left:
            window = [(Fraction(0), z, z_id), (a / 2, x, x_id), (a, z, z_id)]
            for t, pt, owner in inner:
                window.append((a + t / 2, pt, owner))
            new_bps = window + suffix
        elif one_sided_right:
            window = []
            for t, pt, owner in inner:
                window.append((lo + (t - lo) / 2, pt, owner))
            window += [(1 - a, z, z_id), (1 - a / 2, x, x_id), (Fraction(1), z, z_id)]
            new_bps = prefix + window
        else:
            window = []
            for t, pt, owner in inner:
                if t < q:
                    window.append((lo + (t - lo) / 2, pt, owner))
            window.append((q - a, z, z_id))
            window.append((q, x, x_id))
            window.append((q + a, z, z_id))
            for t, pt, owner in inner:
                if t > q:
                    window.append((q + a + (t - q) / 2, pt, owner))
            new_bps = prefix + window + suffix

        _inc(registry, seg_key(z, x), 2)
        marks = dict(self.marks)
        if x_id not in marks:
            marks[x_id] = a / 2 if one_sided_left else (1 - a / 2 if one_sided_right else q)
        if not (one_sided_left or one_sided_right):
            marks[z_id] = q - a
        return Tour(new_bps, marks, registry)

    # -- reconnect ----------------------------------------------------------

    def _segment_fraction(self, p: Point, z1: Point, u: Point, uu: Fraction) -> Optional[Fraction]:
        """Fraction of p along [z1, z1+u] if p lies on the closed segment."""
        w = vsub(p, z1)
        s = vdot(w, u) / uu
        if s < 0 or s > 1:
            return None
        if tuple(z + s * du for z, du in zip(z1, u)) != p:
            return None
        return s

    def _find_direct_window(self, z1: Point, z2: Point):
        """Smallest parameter window traversing [z1, z2] end to end.

        Intermediate breakpoints must be unmarked, lie on the segment, and
        progress monotonically.  Returns (i, j, reversed).
        """
        u = vsub(z2, z1)
        uu = vdot(u, u)
        bps = self.breakpoints
        candidates = []
        for i, (ti, pi, _) in enumerate(bps):
            if pi != z1 and pi != z2:
                continue
            start_at_z1 = pi == z1
            target = z2 if start_at_z1 else z1
            frac = Fraction(0) if start_at_z1 else Fraction(1)
            j = i + 1
            good = True
            while j < len(bps):
                pj = bps[j][1]
                if pj == target:
                    break
                if bps[j][2] is not None:
                    good = False
                    break
                s = self._segment_fraction(pj, z1, u, uu)
                if s is None or (start_at_z1 and s <= frac) or (not start_at_z1 and s >= frac):
                    good = False
                    break
                frac = s
                j += 1
            else:
                good = False
            if good and j < len(bps):
                candidates.append((bps[j][0] - ti, ti, i, j, not start_at_z1))
        if not candidates:
            return None
        candidates.sort()
        _, _, i, j, rev = candidates[0]
        return i, j, rev

    def reconnect(self, z1_id: str, z2_id: str, xs: Sequence, m: int) -> "Tour":
        """Replace the direct segment [z1, z2] by the chain z1 -> xs... -> z2.

        xs is an ordered list of (id, point) along the z1 -> z2 axis; each new
        parameter is chosen so the old tour at that parameter is exactly the
        point's axis projection.
        """
        z1 = self.point_of(z1_id)
        z2 = self.point_of(z2_id)
        if not xs:
            return self.copy()
        found = self._find_direct_window(z1, z2)
        if found is None:
            raise TourError(f"reconnect: no clean direct traversal of [{z1_id}, {z2_id}]")
        i, j, rev = found
        bps = self.breakpoints
        u = vsub(z2, z1)
        uu = vdot(u, u)
        chain = [(xid, as_point(xp)) for xid, xp in xs]
        fracs = []
        for xid, xp in chain:
            s = vdot(vsub(xp, z1), u) / uu
            if not (0 < s < 1):
                raise TourError(f"reconnect: {xid!r} does not project inside the segment")
            fracs.append(s)
        if any(b <= a for a, b in zip(fracs, fracs[1:])):
            raise TourError("reconnect: chain must be strictly ordered along the axis")

        # old parameter at which the window traversal reaches fraction s
        window = bps[i:j + 1]
        piece_fracs = [Fraction(0) if not rev else Fraction(1)]
        for t, pt, _ in window[1:-1]:
            piece_fracs.append(self._segment_fraction(pt, z1, u, uu))
        piece_fracs.append(Fraction(1) if not rev else Fraction(0))

        def param_at(s: Fraction) -> Fraction:
            for k in range(len(window) - 1):
                f0, f1 = piece_fracs[k], piece_fracs[k + 1]
                lo, hi = (f0, f1) if f0 <= f1 else (f1, f0)
                if lo <= s <= hi and f0 != f1:
                    lam = (s - f0) / (f1 - f0)
                    return window[k][0] + lam * (window[k + 1][0] - window[k][0])
            raise TourError("reconnect: fraction outside window")

        order = chain if not rev else list(reversed(chain))
        ordered_fracs = fracs if not rev else list(reversed(fracs))
        new_inner = []
        for (xid, xp), s in zip(order, ordered_fracs):
            new_inner.append((param_at(s), xp, xid))
        if any(b[0] <= a[0] for a, b in zip(new_inner, new_inner[1:])):
            raise TourError("reconnect: parameter collision in chain")

        registry = dict(self.registry)
        for (_, p0, _), (_, p1, _) in zip(window, window[1:]):
            if p0 != p1:
                _dec(registry, seg_key(p0, p1))
        path = [window[0][1]] + [pt for _, pt, _ in new_inner] + [window[-1][1]]
        for p0, p1 in zip(path, path[1:]):
            if p0 != p1:
                _inc(registry, seg_key(p0, p1))

        new_bps = bps[:i + 1] + new_inner + bps[j:]
        marks = dict(self.marks)
        for t, _, xid in new_inner:
            marks[xid] = t
        return Tour(new_bps, marks, registry)

    # -- refresh ------------------------------------------------------------

    def move_points(self, moves: dict) -> "Tour":
        """Update owned breakpoints to refined coordinates; registry rebuilt.

        Unowned breakpoints are window-split points, always collinear between
        the surrounding owned breakpoints; they ride along at their original
        geometric fraction so straight pieces stay straight.
        """
        if not moves:
            return self.copy()
        bps = self.breakpoints
        new_bps: list = []
        for t, pt, owner in bps:
            if owner is not None and owner in moves:
                new_bps.append((t, as_point(moves[owner]), owner))
            else:
                new_bps.append((t, pt, owner))
        # re-place maximal unowned runs between their owned neighbors
        i = 0
        while i < len(bps):
            if bps[i][2] is not None:
                i += 1
                continue
            j = i
            while j < len(bps) and bps[j][2] is None:
                j += 1
            left, right = i - 1, j
            if left >= 0 and right < len(bps):
                old_u, old_v = bps[left][1], bps[right][1]
                new_u, new_v = new_bps[left][1], new_bps[right][1]
                if (new_u, new_v) != (old_u, old_v):
                    span2 = dist2(old_u, old_v)
                    for k in range(i, j):
                        pt = bps[k][1]
                        if span2 == 0:
                            new_pt = new_u
                        else:
                            frac = vdot(vsub(pt, old_u), vsub(old_v, old_u)) / span2
                            new_pt = tuple(a + frac * (b - a) for a, b in zip(new_u, new_v))
                        new_bps[k] = (bps[k][0], new_pt, None)
            i = j
        return Tour(new_bps, self.marks, None)

    # -- whole-tour operations ---------------------------------------------

    def concat(self, other: "Tour") -> "Tour":
        """This tour on [0,1/3], a bridge, then the other on [2/3,1]."""
        third = Fraction(1, 3)
        bps = [(t / 3, pt, owner) for t, pt, owner in self.breakpoints]
        rename = {}
        for mid in other.marks:
            rename[mid] = mid if mid not in self.marks else f"{mid}#2"
        tail = [(Fraction(2, 3) + t / 3, pt,
                 rename.get(owner, owner) if owner is not None else None)
                for t, pt, owner in other.breakpoints]
        bps = bps + tail
        marks = {mid: p / 3 for mid, p in self.marks.items()}
        for mid, p in other.marks.items():
            marks[rename[mid]] = Fraction(2, 3) + p / 3
        return Tour(bps, marks, None)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "breakpoints": [
                {"t": format_rat(t), "x": [format_rat(c) for c in pt],
                 **({"id": owner} if owner is not None else {})}
                for t, pt, owner in self.breakpoints
            ],
            "marks": {mid: format_rat(p) for mid, p in sorted(self.marks.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Tour":
        bps = [(parse_rat(b["t"]), tuple(parse_rat(str(c)) for c in b["x"]), b.get("id"))
               for b in obj["breakpoints"]]
        marks = {mid: parse_rat(p) for mid, p in obj["marks"].items()}
        return cls(bps, marks, None)


# ---------------------------------------------------------------------------
# module helpers


def _inc(registry: dict, key, by: int = 1) -> None:
    registry[key] = registry.get(key, 0) + by


def _dec(registry: dict, key) -> None:
    got = registry.get(key, 0)
    if got <= 0:
        raise TourError(f"registry underflow on {key}")
    if got == 1:
        del registry[key]
    else:
        registry[key] = got - 1


def derive_registry(breakpoints) -> dict:
    """Multiset of directly traversed segments from consecutive breakpoints."""
    registry: dict = {}
    for (_, p0, _), (_, p1, _) in zip(breakpoints, breakpoints[1:]):
        if p0 != p1:
            _inc(registry, seg_key(p0, p1))
    return registry


def sup_distance(f: Tour, g: Tour) -> float:
    """Max over t of |f(t) - g(t)|; exact at merged breakpoint parameters.

    |f - g| is convex on each interval of the merged partition, so the max is
    attained at partition parameters.
    """
    params = sorted(set(f.params()) | set(g.params()))
    best = Fraction(0)
    for t in params:
        d2 = dist2(f.eval(t), g.eval(t))
        if d2 > best:
            best = d2
    return math.sqrt(float(best))


def attach(f: Tour, z_id: str, x_id: str, x: Point, m: int) -> Tour:
    return f.attach(z_id, x_id, x, m)


def reconnect(f: Tour, z1_id: str, z2_id: str, xs: Sequence, m: int) -> Tour:
    return f.reconnect(z1_id, z2_id, xs, m)


def concat(f: Tour, g: Tour) -> Tour:
    return f.concat(g)
