"""Savings-account instrumentation: M/V variables, P1/P2 checks, certificates.

The ledger consumes the synthesis event stream and never influences it.  Each
net point carries a savings value M and a neighbor set V; step events update
them by fixed rules, and the P1/P2 checks verify that neighbor chains are
directly traversed and that savings cover the configured thresholds.  The
final certificate bounds the tour length by the stage-0 deposits plus a
constant multiple of the truncated square-beta sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .constriction import Constriction, beta2_truncated
from .exact_geometry import TOL, Point, as_point, dist2, vdot, vsub
from .netpoints import angle_at_least_two_thirds_pi, cone_contains


class LedgerError(RuntimeError):
    pass


class Ledger:
    """Event-sourced M/V state; re-runnable from a recorded stream."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.M: dict = {}
        self.V: dict = {}
        self.coords: dict = {}
        self.history: list = []
        self.ratio_records: list = []  # (stage, dM_reduction, dl, ratio)
        self.length_f0: float = 0.0
        self.refresh_credit_total: float = 0.0
        self._m1 = 0.0
        self._m23 = 0.0
        self._l_m = 0.0
        self._refresh = 0.0

    # -- helpers -------------------------------------------------------------

    def _len(self, a: str, b: str) -> float:
        return math.sqrt(float(dist2(self.coords[a], self.coords[b])))

    def _credit(self, m: int) -> float:
        """Per-endpoint tip-extension credit: 2^(1-m) plus twice the previous
        stage's coordinate slop (endpoint locations refine between stages)."""
        return 2.0 ** (1 - m) + 2.0 * self.cfg.slop_float(m - 1)

    def _prune_cone(self, z: str, x_coord: Point) -> None:
        keep = set()
        zc = self.coords[z]
        for w in self.V[z]:
            if not cone_contains(zc, x_coord, self.coords[w]):
                keep.add(w)
        self.V[z] = keep

    # -- event application ----------------------------------------------------

    def apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "stage0":
            a, b = event["ids"]
            self.coords[a] = as_point(event["coords"][0])
            self.coords[b] = as_point(event["coords"][1])
            dep = float(event["deposit"])
            self.M[a] = dep
            self.M[b] = dep
            self.V[a] = {b}
            self.V[b] = {a}
            self.length_f0 = float(event["length_f0"])
        elif kind == "refresh":
            # coordinate refinement changes incident segment lengths; credit
            # the signed drift so savings keep tracking current lengths
            moved = set(event["moves"])
            affected = {z for z in self.V if z in moved or (self.V[z] & moved)}
            before = {z: sum(self._len(z, w) for w in self.V[z]) for z in affected}
            for mid, c in event["moves"].items():
                self.coords[mid] = as_point(c)
            for z in affected:
                delta = sum(self._len(z, w) for w in self.V[z]) - before[z]
                self.M[z] = self.M.get(z, 0.0) + delta
                self._refresh += delta
                self.refresh_credit_total += delta
        elif kind == "new_point":
            self.coords[event["id"]] = as_point(event["coords"])
        elif kind == "step1":
            self._apply_step1(event)
        elif kind == "step2":
            self._apply_step2(event)
        elif kind == "step3_attach":
            m = event["m"]
            x0, x1 = event["x0"], event["x1"]
            ln = self._len(x0, x1)
            self.V.setdefault(x0, set()).add(x1)
            self.V.setdefault(x1, set()).add(x0)
            self.M[x0] = self.M.get(x0, 0.0) + ln
            self.M[x1] = self.M.get(x1, 0.0) + ln
            self._m23 += 2 * ln
        elif kind == "step3_bonus":
            amount = float(self.cfg.A) * 2.0 ** (-event["m"])
            x0 = event["x0"]
            self.M[x0] = self.M.get(x0, 0.0) + amount
            self._m23 += amount
        elif kind == "stage_end":
            m = event["m"]
            self.history.append({
                "m": m,
                "M_total": sum(self.M.values()),
                "l_m": self._l_m,
                "M_m1": self._m1,
                "M_m23": self._m23,
                "refresh": self._refresh,
            })
            self._m1 = 0.0
            self._m23 = 0.0
            self._l_m = 0.0
            self._refresh = 0.0
        else:
            raise LedgerError(f"unknown event type {kind!r}")

    def _apply_step1(self, event: dict) -> None:
        m = event["m"]
        z, x0 = event["z"], event["x0"]
        x1 = event.get("x1")
        A = self.cfg.A
        credit = self._credit(m)
        deduct = A * 2.0 ** (1 - m)
        dl = 2.0 * sum(ln for _, _, ln in event["attached"])

        if x1 is None:
            self.V.setdefault(x0, set()).add(z)
            self._prune_cone(z, self.coords[x0])
            self.V[z].add(x0)
            self.M[z] = self.M.get(z, 0.0) - deduct + credit
            before = self.M.get(x0, 0.0)
            self.M[x0] = 2 * credit
            d_m = deduct - credit - (2 * credit - before)
        else:
            self.V.setdefault(x0, set()).add(x1)
            self.V.setdefault(x1, set()).update({z, x0})
            self._prune_cone(z, self.coords[x0])
            self.V[z].add(x1)
            self.M[z] = self.M.get(z, 0.0) - deduct + credit
            b0 = self.M.get(x0, 0.0)
            b1 = self.M.get(x1, 0.0)
            self.M[x0] = 2 * credit
            self.M[x1] = 2 * credit
            d_m = deduct - credit - (2 * credit - b0) - (2 * credit - b1)
        self._m1 += d_m
        self._l_m += dl
        ratio = d_m / dl if dl > 0 else math.inf
        self.ratio_records.append((m, d_m, dl, ratio))

    def _apply_step2(self, event: dict) -> None:
        z, z1 = event["z"], event["z1"]
        chain = event["chain"]
        x0, xN = chain[0], chain[-1]
        len_z_z1 = self._len(z, z1)
        delta = 0.0

        self.V[z] = (self.V.get(z, set()) | {x0}) - {z1}
        d = -len_z_z1 + self._len(z, x0)
        self.M[z] = self.M.get(z, 0.0) + d
        delta += d

        self.V.setdefault(x0, set()).add(z)
        d = self._len(z, x0)
        self.M[x0] = self.M.get(x0, 0.0) + d
        delta += d

        self.V[z1] = (self.V.get(z1, set()) | {xN}) - {z}
        d = -len_z_z1 + self._len(xN, z1)
        self.M[z1] = self.M.get(z1, 0.0) + d
        delta += d

        self.V.setdefault(xN, set()).add(z1)
        d = self._len(xN, z1)
        self.M[xN] = self.M.get(xN, 0.0) + d
        delta += d

        for a, b in zip(chain, chain[1:]):
            ln = self._len(a, b)
            self.V.setdefault(a, set()).add(b)
            self.V.setdefault(b, set()).add(a)
            self.M[a] = self.M.get(a, 0.0) + ln
            self.M[b] = self.M.get(b, 0.0) + ln
            delta += 2 * ln
        self._m23 += delta


# ---------------------------------------------------------------------------
# property checks


def check_P1(ledger: Ledger, tour) -> list:
    """Neighbor chains must be directly traversed.

    For each point z and axis z' in V(z), arrange {z} union V(z) by projection
    on the line through z and z'; consecutive pairs must be explicit segments.
    Same-side pairs (neither member is z) also pass when both are explicitly
    connected through z, which covers hub fan-outs in wide regions.
    """
    violations = []
    for z, vs in ledger.V.items():
        if not vs:
            continue
        zc = ledger.coords[z]
        for axis_id in sorted(vs):
            u = vsub(ledger.coords[axis_id], zc)
            uu = vdot(u, u)
            if uu == 0:
                continue
            arranged = [(Fraction(0), z, zc)]
            for w in vs:
                wc = ledger.coords[w]
                arranged.append((vdot(vsub(wc, zc), u) / uu, w, wc))
            arranged.sort(key=lambda t: (t[0], t[1]))
            for (s0, id0, c0), (s1, id1, c1) in zip(arranged, arranged[1:]):
                if tour.is_explicit(c0, c1):
                    continue
                if id0 != z and id1 != z and tour.is_explicit(c0, zc) and tour.is_explicit(zc, c1):
                    continue
                violations.append({"z": z, "axis": axis_id, "pair": (id0, id1)})
    return violations


def check_P2(ledger: Ledger, m: int, cfg, survivor_centers: np.ndarray,
             survivor_cubes=None, settled: Optional[Sequence[str]] = None):
    """Savings must cover the stage thresholds.

    Case 1 (two neighbors at least 2*pi/3 apart): M >= sum of incident
    lengths.  Case 2 (some side cone empty of neighbors): additionally
    2^(1-m), and A*2^(1-m-k) whenever a surviving center y between radii
    2^(-m-k) and 2^(1-m) has its whole cone at z empty of neighbors (such a
    y is exactly a potential future tip-extension target, whose deduction the
    savings must pre-fund).  Distances within slop of a radius threshold are
    flagged, not failed.  Returns (violations, flags).
    """
    A = cfg.A
    n = cfg.n
    slop = cfg.slop_float(m)
    violations = []
    flags = []
    ids = sorted(ledger.M.keys()) if settled is None else sorted(settled)
    for z in ids:
        vs = ledger.V.get(z, set())
        if not vs:
            violations.append({"z": z, "why": "empty neighbor set"})
            continue
        zc = ledger.coords[z]
        incident = sum(ledger._len(z, w) for w in vs)
        mz = ledger.M.get(z, 0.0)
        tol = TOL * max(1.0, incident + abs(mz) + 1.0)

        vlist = sorted(vs)
        vecs = [vsub(ledger.coords[w], zc) for w in vlist]
        case1 = False
        arr = np.array([[float(c) for c in v] for v in vecs])
        norms = np.linalg.norm(arr, axis=1)
        unit = arr / np.where(norms > 0, norms, 1.0)[:, None]
        dots = unit @ unit.T
        cand = np.argwhere(dots <= -0.5 + 1e-9)
        for i, j in cand:
            if i < j and angle_at_least_two_thirds_pi(vecs[int(i)], vecs[int(j)]):
                case1 = True
                break
        if case1:
            if mz + tol < incident:
                violations.append({"z": z, "why": "case1 savings deficit",
                                   "M": mz, "needed": incident})
            continue
        # case 2
        needed_a = 2.0 ** (1 - m) + incident
        if mz + tol < needed_a:
            violations.append({"z": z, "why": "case2a savings deficit",
                               "M": mz, "needed": needed_a})
            continue
        if len(survivor_centers):
            zf = np.array([float(c) for c in zc])
            rel = survivor_centers - zf
            d = np.linalg.norm(rel, axis=1)
            in_ball = np.nonzero((d <= 2.0 ** (1 - m)) & (d - slop > 0))[0]
            lenient = 0.0   # guard distances relaxed by the stage slop
            strict = 0.0    # guard distances tightened by the stage slop
            if len(in_ball):
                # witness y qualifies when its whole cone at z avoids V(z):
                # all neighbor cosines below -1/2 (float prescan, exact on ties)
                rel_b = rel[in_ball]
                cos = (unit @ rel_b.T) / np.where(d[in_ball] > 0, d[in_ball], 1.0)
                blocked = (cos >= -0.5 + 1e-9).any(axis=0)
                for bi in np.nonzero(~blocked)[0]:
                    idx = int(in_ball[bi])
                    dd = float(d[idx])
                    near = np.nonzero(cos[:, bi] >= -0.5 - 1e-9)[0]
                    if len(near) and survivor_cubes is not None:
                        y_exact = survivor_cubes[idx].center()
                        if any(cone_contains(zc, y_exact, ledger.coords[vlist[int(j)]])
                               for j in near):
                            continue
                    k = max(0, math.floor(-m - math.log2(dd - slop)) + 1)
                    lenient = max(lenient, A * 2.0 ** (1 - m - k))
                    k2 = max(0, math.floor(-m - math.log2(dd + slop)) + 1)
                    strict = max(strict, A * 2.0 ** (1 - m - k2))
            if lenient and mz + tol < lenient + incident:
                violations.append({"z": z, "why": "case2b savings deficit",
                                   "M": mz, "needed": lenient + incident})
            elif strict > lenient and mz + tol < strict + incident:
                flags.append({"z": z, "why": "borderline case2b radius",
                              "M": mz, "strict_needed": strict + incident})
    return violations, flags


# ---------------------------------------------------------------------------
# packing constants and the certificate


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def packing_constants(cfg, stages: int):
    """Upper bounds C1 (net points in a tripled cube) and C2 (new points).

    Points separated by s own disjoint balls of radius s/2 inside the box
    inflated by s/2, so the count is at most vol((L+s)^n) / vol(ball(s/2)).
    The worst separation-to-pitch ratio over the run's schedule is used.
    """
    A = cfg.A
    n = cfg.n
    ratio = min(
        1.0 - math.sqrt(n) * 2.0 ** (m - cfg.r(m))
        for m in range(1, max(2, stages + 1))
    )
    if ratio <= 0:
        raise LedgerError("precision schedule too coarse: net separation vanishes")
    s = ratio  # in units of 2^-m
    L = 3 * A
    c1 = math.ceil((L + s) ** n / (unit_ball_volume(n) * (s / 2) ** n))
    return c1, c1, ratio


@dataclass
class Certificate:
    A: int
    M0: float
    C1: int
    C2: int
    C3: float
    C: float
    beta2_trunc: float
    length_f0: float
    bound: float
    measured_length: float
    measured_H1: float
    valid: bool
    failures: list = field(default_factory=list)
    ratio_min: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "A": self.A, "M0": self.M0, "C1": self.C1, "C2": self.C2,
            "C3": self.C3, "C": self.C, "beta2_trunc": self.beta2_trunc,
            "length_f0": self.length_f0, "bound": self.bound,
            "measured_length": self.measured_length, "measured_H1": self.measured_H1,
            "ratio_min": self.ratio_min,
            "valid": self.valid, "failures": self.failures,
        }


def certificate(ledger: Ledger, reports, g: Constriction, cfg, tour) -> Certificate:
    """Assemble and check the final length certificate."""
    A = cfg.A
    n = cfg.n
    stages = len(reports)
    c1, c2, _ = packing_constants(cfg, stages)
    c3 = 4.0 * A * A
    big_c = max(9.0 * c1 * c2 * math.sqrt(n) / float(cfg.eps0) ** 2, 2.0 * c3)
    beta2 = float(beta2_truncated(g, 1 - cfg.k0, stages - cfg.k0)) if stages >= 1 else 0.0
    length_f0 = ledger.length_f0
    m0 = 2.0 * (A + 1) * length_f0
    bound = 2.0 * length_f0 + 6.0 * m0 / (A - 7) + 2.0 * big_c * (1.0 + 3.0 / (A - 7)) * beta2
    measured = tour.length()
    h1 = tour.h1_distinct()
    failures = []
    if measured > bound * (1 + TOL) + TOL:
        failures.append({"check": "length_bound", "measured": measured, "bound": bound})
    if measured > 2 * h1 * (1 + TOL) + TOL:
        failures.append({"check": "double_traversal", "measured": measured, "h1": h1})
    ratio_min = None
    threshold = (A - 7) / 3.0
    for m, d_m, dl, ratio in ledger.ratio_records:
        ratio_min = ratio if ratio_min is None else min(ratio_min, ratio)
        if ratio < threshold - TOL * max(1.0, threshold):
            failures.append({"check": "farthest_insertion_ratio", "stage": m,
                             "ratio": ratio, "threshold": threshold})
    for rep in reports:
        for fail in rep.check_failures:
            failures.append({"check": "stage", "stage": rep.m, "detail": fail})
    return Certificate(
        A=A, M0=m0, C1=c1, C2=c2, C3=c3, C=big_c, beta2_trunc=beta2,
        length_f0=length_f0, bound=bound, measured_length=measured,
        measured_H1=h1, valid=not failures, failures=failures, ratio_min=ratio_min,
    )
