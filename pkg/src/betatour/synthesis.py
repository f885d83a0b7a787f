"""The staged tour construction: stage 0, cube classification, tip extension
(farthest insertion), chain splicing (nearest insertion), and wide-cube
attachment, with the savings ledger observing every event.

Each stage m works at net pitch 2^-m over cubes of sidelength A*2^-m and a
sieve refined to the schedule precision r(m).  The tour is patched locally, so
consecutive stage tours stay within sqrt(n)*3*A*2^-m of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import dyadic
from .constriction import Constriction, SieveCache, beta_of, persistify
from .dyadic import DyadicCube, cube_of_point
from .exact_geometry import (
    TOL,
    Point,
    as_point,
    cmp_sq_slopped,
    dist2,
    format_rat,
    rat,
)
from .ledger import Ledger, check_P1, check_P2
from .netpoints import (
    Net,
    NetPoint,
    check_c1,
    check_c2,
    closest_marked,
    cone_contains,
    refine_point,
    select_net,
)
from .tour import Tour


class SynthesisError(RuntimeError):
    pass


class ConfigurationError(SynthesisError):
    pass


@dataclass(frozen=True)
class SynthesisConfig:
    """Stage-loop parameters; defaults satisfy A = 2^k0 > 9, eps0 < 1/(A^3 sqrt(n)).

    The precision schedule is r(m) = min(max(2^m, m + precision_floor),
    precision_cap); the floor keeps early-stage coordinate slop far below the
    net pitch, the cap keeps desk-scale sieves finite.  All slop terms derive
    from the actual schedule.
    """

    n: int = 2
    k0: int = 4
    eps0: Fraction = Fraction(1, 8192)
    stages: int = 6
    precision_floor: int = 6
    precision_cap: int = 12
    bounds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "eps0", rat(self.eps0))
        if self.n < 2:
            raise ConfigurationError("ambient dimension must be at least 2")
        if self.A <= 9:
            raise ConfigurationError("need A = 2^k0 > 9 (k0 >= 4)")
        # exact check of eps0 < 1/(A^3 sqrt(n)):  eps0^2 * A^6 * n < 1
        if self.eps0 <= 0 or self.eps0 ** 2 * Fraction(self.A) ** 6 * self.n >= 1:
            raise ConfigurationError("eps0 must be positive and below 1/(A^3 sqrt(n))")
        if self.stages < 0:
            raise ConfigurationError("stages must be nonnegative")
        b = self.bounds
        if b is None:
            b = (tuple([Fraction(0)] * self.n), tuple([Fraction(1)] * self.n))
        object.__setattr__(self, "bounds", (as_point(b[0]), as_point(b[1])))

    @property
    def A(self) -> int:
        return 2 ** self.k0

    def r(self, m: int) -> int:
        if m < 0:
            m = 0
        grow = 2 ** m if m < 30 else self.precision_cap
        return min(max(grow, m + self.precision_floor), self.precision_cap)

    def slop_float(self, m: int) -> float:
        return math.sqrt(self.n) * 2.0 ** (-self.r(m))

    def to_json(self) -> dict:
        return {
            "n": self.n, "k0": self.k0, "eps0": format_rat(self.eps0),
            "stages": self.stages, "precision_floor": self.precision_floor,
            "precision_cap": self.precision_cap,
            "bounds": [[format_rat(c) for c in self.bounds[0]],
                       [format_rat(c) for c in self.bounds[1]]],
        }


@dataclass
class StageReport:
    m: int
    net_size: int = 0
    new_points: int = 0
    frozen_points: int = 0
    step1_simple: int = 0
    step1_pair: int = 0
    step2_reconnects: int = 0
    step2_points: int = 0
    step3_attaches: int = 0
    narrow_cubes: int = 0
    fat_cubes: int = 0
    delta_refresh: float = 0.0
    delta_step1: float = 0.0
    delta_step2: float = 0.0
    delta_step3: float = 0.0
    delta_total: float = 0.0
    beta2_order: float = 0.0
    beta2_narrow_inflated: float = 0.0
    beta2_fat: float = 0.0
    sup_move: float = 0.0
    sup_move_bound: float = 0.0
    m_total: float = 0.0
    m_m1: float = 0.0
    m_m23: float = 0.0
    p2_flags: int = 0
    check_failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class _Candidate:
    id: str
    cube: DyadicCube
    coord: Point
    z_id: str = ""
    narrow: bool = True
    beta_cube: Optional[DyadicCube] = None
    from_tip_scan: bool = False
    processed: bool = False


class SynthesisState:
    def __init__(self, g: Constriction, cfg: SynthesisConfig):
        self.g = g
        self.cfg = cfg
        self.cache = SieveCache(g)
        self.net: Optional[Net] = None
        self.tour: Optional[Tour] = None
        self.ledger = Ledger(cfg)
        self.events: list = []
        self.reports: list = []
        self._spur_count = 0

    def emit(self, event: dict) -> None:
        self.events.append(event)
        self.ledger.apply(event)


def _inner_corner_cube(x: Point, m: int) -> DyadicCube:
    """Order-m cube whose closure contains x, from below on each axis."""
    scale = Fraction(2) ** m
    corner = []
    for c in x:
        v = c * scale
        corner.append(-((-v.numerator) // v.denominator) - 1)  # ceil - 1
    return DyadicCube(m, tuple(corner))


def stage0(g: Constriction, cfg: SynthesisConfig, state: Optional[SynthesisState] = None):
    """Anchors at the diagonal corners of bounds, the straight tour between
    them, and the initial savings deposit (A+1 per anchor, scaled by the
    diagonal length)."""
    st = state or SynthesisState(g, cfg)
    r0 = cfg.r(0)
    st.cache.extend_to(r0)
    lo, hi = cfg.bounds
    cube_lo = cube_of_point(lo, r0)
    cube_hi = _inner_corner_cube(hi, r0)
    alive = st.cache.survivor_set(r0)
    for name, cube, coord in (("a0", cube_lo, lo), ("a1", cube_hi, hi)):
        if (cube.order, cube.corner) not in alive:
            raise ConfigurationError(
                f"anchor {name} at {[format_rat(c) for c in coord]} is not permitted: "
                f"cube order={cube.order} corner={list(cube.corner)} fails the sieve"
            )
    p0 = NetPoint("a0", chain=[(0, cube_lo)], fixed=lo, birth_stage=0)
    p1 = NetPoint("a1", chain=[(0, cube_hi)], fixed=hi, birth_stage=0)
    st.net = Net([p0, p1], stage=0)
    st.tour = Tour.line("a0", lo, "a1", hi)
    length_f0 = st.tour.length()
    st.emit({
        "type": "stage0",
        "m": 0,
        "ids": ["a0", "a1"],
        "coords": [[format_rat(c) for c in lo], [format_rat(c) for c in hi]],
        "deposit": (cfg.A + 1) * length_f0,
        "length_f0": length_f0,
    })
    st.emit({"type": "stage_end", "m": 0})
    return st


def classify_cubes(g: Constriction, m: int, cfg: SynthesisConfig) -> dict:
    """Narrow/fat classification of the stage-m cubes meeting bounds.

    Exact rational comparison of the assigned beta number against eps0; the
    boundary case beta == eps0 is fat.
    """
    out = {}
    order = m - cfg.k0
    for q in dyadic.grid_cubes(cfg.bounds[0], cfg.bounds[1], order):
        out[q] = "narrow" if beta_of(g, q) < cfg.eps0 else "fat"
    return out


def _cone_ball_empty(net: Net, z_id: str, z: Point, x: Point, radius_base: Fraction,
                     n: int, r: int) -> bool:
    """No previous net point other than z in the cone toward x within the
    slop-inflated ball around z."""
    for p in net.points:
        if p.id == z_id:
            continue
        d2 = dist2(p.coord, z)
        if cmp_sq_slopped(d2, radius_base, Fraction(1), n, r) > 0:
            continue
        if cone_contains(z, x, p.coord):
            return False
    return True


def farthest_candidates(state: SynthesisState, m: int, pre_list, survivors, centers_np):
    """Tip-extension candidates, kept or substituted by the in-cone farthest
    surviving center (within the schedule slop), deduplicated by separation.

    pre_list holds (cube, coord, z_id) triples for narrow candidates whose
    cone toward the tip is empty of older net points.  Returns kept triples.
    """
    cfg = state.cfg
    n = cfg.n
    r = cfg.r(m)
    slop = cfg.slop_float(m)
    ball2 = float(Fraction(2) ** (2 * (1 - m)))
    coords = state.net.coords()
    kept = []
    kept_coords = []
    prev_coords = [p.coord for p in state.net.points]
    sep_base = Fraction(2) ** (-m)
    for cube, coord, z_id in pre_list:
        z = coords[z_id]
        zf = np.array([float(c) for c in z])
        rel = centers_np - zf
        d2s = np.sum(rel * rel, axis=1)
        in_ball = d2s <= ball2 + 1e-12
        best = None  # (dist_f, cube, center)
        own_d = math.sqrt(float(dist2(coord, z)))
        for idx in np.nonzero(in_ball)[0]:
            y = survivors[int(idx)]
            yc = y.center()
            if not cone_contains(z, coord, yc):
                continue
            df = math.sqrt(float(d2s[int(idx)]))
            if best is None or df > best[0] + 1e-15:
                best = (df, y, yc)
        if best is None or own_d >= best[0] - slop:
            pick_cube, pick_coord = cube, coord
        else:
            pick_cube, pick_coord = best[1], best[2]
        ok = True
        for other in prev_coords + kept_coords:
            if pick_coord == other:
                ok = False
                break
            if cmp_sq_slopped(dist2(pick_coord, other), sep_base, Fraction(-1), n, r) < 0:
                ok = False
                break
        if ok:
            kept.append((pick_cube, pick_coord, z_id, pick_coord != coord))
            kept_coords.append(pick_coord)
    return kept


def _attach(st: SynthesisState, z_id: str, x_id: str, x_coord: Point, m: int) -> float:
    before = st.tour.length()
    st.tour = st.tour.attach(z_id, x_id, x_coord, m)
    return st.tour.length() - before


def _run_property_checks(st: SynthesisState, m: int, report: StageReport, step: str) -> None:
    p1 = check_P1(st.ledger, st.tour)
    r_m = st.cfg.r(m)
    p2, flags = check_P2(st.ledger, m, st.cfg, st.cache.centers_np(r_m),
                         survivor_cubes=st.cache.survivors(r_m))
    report.p2_flags += len(flags)
    if p1 or p2:
        report.check_failures.append({"step": step, "P1": p1[:5], "P2": p2[:5]})
        raise SynthesisError(
            f"stage {m} {step}: ledger property violation: P1={p1[:3]} P2={p2[:3]}"
        )


def run_stage(st: SynthesisState, m: int) -> StageReport:
    cfg = st.cfg
    g = st.g
    n = cfg.n
    A = cfg.A
    r_prev = cfg.r(m - 1)
    r_m = cfg.r(m)
    report = StageReport(m=m)
    tour_before = st.tour
    len_start = st.tour.length()

    st.cache.extend_to(r_m)

    # refresh: refine chains to this stage's precision, move the tour's
    # owned breakpoints to the new cube centers
    moves = {}
    for p in st.net.points:
        old = p.coord
        refine_point(p, st.cache, r_prev, r_m, stage=m)
        if p.coord != old:
            moves[p.id] = p.coord
    report.frozen_points = sum(1 for p in st.net.points if p.frozen)
    if moves:
        st.tour = st.tour.move_points(moves)
        st.emit({"type": "refresh", "m": m,
                 "moves": {pid: [format_rat(c) for c in coord] for pid, coord in sorted(moves.items())}})
    report.delta_refresh = st.tour.length() - len_start

    survivors = st.cache.survivors(r_m)
    centers_np = st.cache.centers_np(r_m)
    if not survivors:
        raise SynthesisError(f"stage {m}: nothing permitted at order {r_m}")

    classes = classify_cubes(g, m, cfg)
    report.narrow_cubes = sum(1 for v in classes.values() if v == "narrow")
    report.fat_cubes = sum(1 for v in classes.values() if v == "fat")

    # candidate selection: greedy completion of the previous net
    chosen = select_net(survivors, centers_np, st.net.points, m, r_m, n)
    prev_pool = [(p.id, p.coord) for p in st.net.points]

    def beta_cube_of(coord: Point) -> DyadicCube:
        return cube_of_point(coord, m - cfg.k0)

    def is_narrow(coord: Point) -> bool:
        q = beta_cube_of(coord)
        got = classes.get(q)
        if got is None:
            got = "narrow" if beta_of(g, q) < cfg.eps0 else "fat"
            classes[q] = got
        return got == "narrow"

    # tip-extension pre-list: narrow candidates with no older point in the
    # cone out to A*2^(1-m) (plus slop)
    coneball_base = Fraction(A) * Fraction(2) ** (1 - m)
    pre_list = []
    plain = []
    for cube, coord in chosen:
        near = closest_marked(coord, prev_pool)
        z_id = near[0][0]
        if is_narrow(coord) and _cone_ball_empty(st.net, z_id, st.net.coords()[z_id],
                                                 coord, coneball_base, n, r_m):
            pre_list.append((cube, coord, z_id))
        else:
            plain.append((cube, coord, z_id))

    tip_kept = farthest_candidates(st, m, pre_list, survivors, centers_np)

    # completion: re-run the greedy over all survivors against prev + tips
    candidates: list = []
    counter = 0

    def new_candidate(cube, coord, z_id, tip: bool) -> _Candidate:
        nonlocal counter
        cand = _Candidate(id=f"p{m}_{counter}", cube=cube, coord=coord, z_id=z_id,
                          narrow=is_narrow(coord), beta_cube=beta_cube_of(coord),
                          from_tip_scan=tip)
        counter += 1
        candidates.append(cand)
        st.emit({"type": "new_point", "m": m, "id": cand.id,
                 "coords": [format_rat(c) for c in coord]})
        return cand

    for cube, coord, z_id, substituted in tip_kept:
        new_candidate(cube, coord, z_id, tip=True)

    class _Shim:
        def __init__(self, coord):
            self.coord = coord
            self.frozen = False
            self.fixed = coord

    shim_points = st.net.points + [_Shim(c.coord) for c in candidates]
    extra = select_net(survivors, centers_np, shim_points, m, r_m, n)
    coords_now = st.net.coords()
    for cube, coord in extra:
        near = closest_marked(coord, prev_pool)
        new_candidate(cube, coord, near[0][0], tip=False)

    report.new_points = len(candidates)
    l_hat1 = [c for c in candidates if c.from_tip_scan]

    # ---- Step 1: tip extension (farthest insertion) ----
    len_before = st.tour.length()
    ball2_exact = Fraction(4) ** (1 - m)
    for x0 in l_hat1:
        z = coords_now[x0.z_id]
        others = [y for y in candidates
                  if y is not x0 and dist2(y.coord, z) <= ball2_exact
                  and cone_contains(z, x0.coord, y.coord)]
        if len(others) > 1:
            raise SynthesisError(
                f"stage {m} step 1: cone around {x0.z_id} toward {x0.id} holds "
                f"{len(others)} other candidates; expected at most one: "
                f"{[y.id for y in others]}"
            )
        if not others:
            ln = _attach(st, x0.z_id, x0.id, x0.coord, m)
            st.emit({"type": "step1", "m": m, "branch": "simple", "z": x0.z_id,
                     "x0": x0.id, "x1": None,
                     "attached": [[x0.z_id, x0.id, ln / 2.0]]})
            x0.processed = True
            report.step1_simple += 1
        else:
            x1 = others[0]
            attached = []
            if x1.id not in st.tour.marks:
                ln1 = _attach(st, x1.z_id, x1.id, x1.coord, m)
                attached.append([x1.z_id, x1.id, ln1 / 2.0])
            ln0 = _attach(st, x1.id, x0.id, x0.coord, m)
            attached.append([x1.id, x0.id, ln0 / 2.0])
            st.emit({"type": "step1", "m": m, "branch": "pair", "z": x0.z_id,
                     "x0": x0.id, "x1": x1.id, "attached": attached})
            x0.processed = True
            x1.processed = True
            report.step1_pair += 1
        for cand in (x0,):
            st.net.add(NetPoint(cand.id, chain=[(m, cand.cube)], birth_stage=m))
        if others and others[0].id not in {p.id for p in st.net.points}:
            st.net.add(NetPoint(others[0].id, chain=[(m, others[0].cube)], birth_stage=m))
    report.delta_step1 = st.tour.length() - len_before
    _run_property_checks(st, m, report, "step1")

    # ---- Step 2: chain splicing (nearest insertion) ----
    len_before = st.tour.length()
    ball_a2 = (Fraction(A) * Fraction(2) ** (1 - m)) ** 2
    while True:
        progress = False
        pending = [c for c in candidates if c.narrow and not c.processed]
        if not pending:
            break
        mc = st.net.coords()
        for x0 in pending:
            if x0.processed:
                continue
            z_id = x0.z_id
            z = mc[z_id]
            best = None
            for w in st.tour.explicit_partners(z, mc):
                if w == z_id:
                    continue
                wc = mc[w]
                if dist2(wc, z) > ball_a2:
                    continue
                if not cone_contains(z, x0.coord, wc):
                    continue
                d2x = dist2(wc, x0.coord)
                if best is None or (d2x, w) < (best[0], best[1]):
                    best = (d2x, w, wc)
            if best is None:
                continue
            z1_id, z1c = best[1], best[2]
            ball_r2 = dist2(z, z1c)
            u = tuple(b - a for a, b in zip(z, z1c))
            uu = sum(c * c for c in u)
            members = []
            for y in candidates:
                if not y.narrow or y.processed:
                    continue
                if dist2(y.coord, z) > ball_r2:
                    continue
                if not cone_contains(z, x0.coord, y.coord):
                    continue
                s = sum((yc - zc) * du for yc, zc, du in zip(y.coord, z, u)) / uu
                if 0 < s < 1:
                    members.append((s, y.id, y))
            if not members:
                continue
            members.sort(key=lambda t: (t[0], t[1]))
            if members[0][2] is not x0:
                continue
            chain = [(y.id, y.coord) for _, _, y in members]
            st.tour = st.tour.reconnect(z_id, z1_id, chain, m)
            for _, _, y in members:
                y.processed = True
                st.net.add(NetPoint(y.id, chain=[(m, y.cube)], birth_stage=m))
            st.emit({"type": "step2", "m": m, "z": z_id, "z1": z1_id,
                     "chain": [y.id for _, _, y in members]})
            report.step2_reconnects += 1
            report.step2_points += len(members)
            progress = True
            mc = st.net.coords()
        if not progress:
            break
    leftovers = [c.id for c in candidates if c.narrow and not c.processed]
    if leftovers:
        raise SynthesisError(
            f"stage {m} step 2: narrow candidates left unprocessed: {leftovers}"
        )
    report.delta_step2 = st.tour.length() - len_before
    _run_property_checks(st, m, report, "step2")

    # ---- Step 3: wide cubes ----
    len_before = st.tour.length()
    for x0 in candidates:
        if x0.narrow:
            continue
        zc = coords_now[x0.z_id]
        if x0.id not in st.tour.marks or not st.tour.is_explicit(zc, x0.coord):
            _attach(st, x0.z_id, x0.id, x0.coord, m)
            st.emit({"type": "step3_attach", "m": m, "x0": x0.z_id, "x1": x0.id})
            report.step3_attaches += 1
        if x0.id not in {p.id for p in st.net.points}:
            st.net.add(NetPoint(x0.id, chain=[(m, x0.cube)], birth_stage=m))
        x0.processed = True
        t_lo, t_hi = dyadic.triple_bounds(x0.beta_cube)
        neighbors = []
        seen_ids = {x0.id}
        for p in st.net.points:
            if p.id in seen_ids:
                continue
            c = p.coord
            if all(l <= v <= h for l, v, h in zip(t_lo, c, t_hi)):
                neighbors.append((p.id, c))
                seen_ids.add(p.id)
        for y in candidates:
            if y is x0 or y.id in seen_ids:
                continue
            c = y.coord
            if all(l <= v <= h for l, v, h in zip(t_lo, c, t_hi)):
                neighbors.append((y.id, c))
                seen_ids.add(y.id)
        neighbors.sort(key=lambda t: t[0])
        for y_id, y_coord in neighbors:
            if st.tour.is_explicit(x0.coord, y_coord):
                continue
            _attach(st, x0.id, y_id, y_coord, m)
            st.emit({"type": "step3_attach", "m": m, "x0": x0.id, "x1": y_id})
            report.step3_attaches += 1
        st.emit({"type": "step3_bonus", "m": m, "x0": x0.id})
    for x0 in candidates:
        if not x0.processed:
            raise SynthesisError(f"stage {m}: candidate {x0.id} never processed")
    report.delta_step3 = st.tour.length() - len_before
    _run_property_checks(st, m, report, "step3")

    # ---- end-of-stage checks ----
    st.net.stage = m
    c1_bad = check_c1(st.net.points, m, r_m, n)
    c2_bad = check_c2(st.net.points, survivors, centers_np, m, r_m, n)
    if c1_bad:
        report.check_failures.append({"check": "C1", "pairs": c1_bad[:5]})
        raise SynthesisError(f"stage {m}: C1 separation violated: {c1_bad[:3]}")
    if c2_bad:
        report.check_failures.append({"check": "C2", "cubes": [q.to_json() for q in c2_bad[:5]]})
        raise SynthesisError(f"stage {m}: C2 coverage violated for {len(c2_bad)} cubes")

    from .tour import sup_distance
    report.sup_move = sup_distance(tour_before, st.tour)
    report.sup_move_bound = math.sqrt(n) * 3 * A * 2.0 ** (-m)
    if report.sup_move > report.sup_move_bound * (1 + TOL):
        report.check_failures.append({"check": "sup_move", "value": report.sup_move,
                                      "bound": report.sup_move_bound})
        raise SynthesisError(f"stage {m}: stage movement exceeded its bound")

    # per-stage budget bookkeeping
    order = m - cfg.k0
    slop = cfg.slop_float(m)
    beta2_order = 0.0
    beta2_narrow_infl = 0.0
    beta2_fat = 0.0
    for q, cls in classes.items():
        b = float(beta_of(g, q))
        side = float(q.side())
        beta2_order += b * b * side
        if cls == "fat":
            beta2_fat += b * b * side
        else:
            bi = b + 2 * slop / side
            beta2_narrow_infl += bi * bi * side
    report.beta2_order = beta2_order
    report.beta2_narrow_inflated = beta2_narrow_infl
    report.beta2_fat = beta2_fat

    c1_pack, c2_pack = _pack_consts(cfg, m)
    c3 = 4.0 * A * A
    big_c = max(9.0 * c1_pack * c2_pack * math.sqrt(n) / float(cfg.eps0) ** 2, 2.0 * c3)
    budget2 = c3 * beta2_narrow_infl
    budget3 = (9.0 * c1_pack * c2_pack * math.sqrt(n) / float(cfg.eps0) ** 2) * beta2_fat
    scale = max(1.0, st.tour.length())
    if report.delta_step2 > budget2 + TOL * scale:
        report.check_failures.append({"check": "step2_budget", "delta": report.delta_step2,
                                      "budget": budget2})
        raise SynthesisError(f"stage {m}: chain-splice increment exceeds its budget")
    if report.delta_step3 > budget3 + TOL * scale:
        report.check_failures.append({"check": "step3_budget", "delta": report.delta_step3,
                                      "budget": budget3})
        raise SynthesisError(f"stage {m}: wide-cube increment exceeds its budget")

    st.emit({"type": "stage_end", "m": m})
    hist = st.ledger.history[-1]
    report.m_total = hist["M_total"]
    report.m_m1 = hist["M_m1"]
    report.m_m23 = hist["M_m23"]
    # stage inequality: M_m23 - M_m1 <= C * budgets - ((A-7)/3) l_m
    rhs = big_c * (beta2_narrow_infl + beta2_fat) - (A - 7) / 3.0 * hist["l_m"]
    if hist["M_m23"] - hist["M_m1"] > rhs + TOL * max(1.0, abs(rhs) + hist["M_total"]):
        report.check_failures.append({"check": "stage_inequality",
                                      "lhs": hist["M_m23"] - hist["M_m1"], "rhs": rhs})
        raise SynthesisError(f"stage {m}: savings stage inequality violated")

    report.net_size = len(st.net.points)
    report.delta_total = st.tour.length() - len_start
    if len(st.reports) >= m:
        st.reports[m - 1] = report
    else:
        st.reports.append(report)
    return report


def _pack_consts(cfg: SynthesisConfig, stages: int):
    from .ledger import packing_constants

    c1, c2, _ = packing_constants(cfg, stages)
    return c1, c2


@dataclass
class SynthesisResult:
    tour: Tour
    certificate: object
    reports: list
    events: list
    net: Net
    config: SynthesisConfig
    constriction: Constriction


def synthesize(g: Constriction, cfg: Optional[SynthesisConfig] = None) -> SynthesisResult:
    """Run stage 0 through stage M and certify the resulting tour."""
    cfg = cfg or SynthesisConfig()
    if g.n != cfg.n:
        raise ConfigurationError(f"constriction dimension {g.n} vs config {cfg.n}")
    gp = persistify(g)
    gp.bounds = (as_point(cfg.bounds[0]), as_point(cfg.bounds[1]))
    st = stage0(gp, cfg)
    for m in range(1, cfg.stages + 1):
        run_stage(st, m)
    from .ledger import certificate as make_certificate

    cert = make_certificate(st.ledger, st.reports, gp, cfg, st.tour)
    return SynthesisResult(tour=st.tour, certificate=cert, reports=st.reports,
                           events=st.events, net=st.net, config=cfg, constriction=gp)
