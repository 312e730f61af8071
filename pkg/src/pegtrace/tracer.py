"""Numerical continuation of the space of rectangles gracing a polygon.

Arcs are seeded at degenerate rectangles sitting on positive diameters and
followed through the charts of edge quadruples; whenever a rectangle vertex
reaches a polygon vertex the walk is handed to the neighbouring quadruple.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from .charts import (
    LINE_KINDS,
    AllParallelToL4,
    Chart,
    EdgeQuadruple,
    SingularPoint,
    build_chart,
)
from .diameters import Diameter, DiameterReport, find_diameters
from .geometry import LabeledRectangle, Point, Polygon, cyclic_order_ok, dist, rect_distance, rect_step

log = logging.getLogger(__name__)


class TraceError(RuntimeError):
    pass


class TrickyDiameter(TraceError):
    pass


class NoViableChart(TraceError):
    pass


class DeadEnd(TraceError):
    pass


class StepBudgetExhausted(TraceError):
    pass


class CorrectorDivergence(TraceError):
    pass


class UnmatchedTerminalDiameter(TraceError):
    pass


class RepeatBoundViolated(TraceError):
    pass


@dataclass(frozen=True)
class TraceConfig:
    """Continuation settings; lengths are fractions of the polygon perimeter."""

    h0: float = 1e-3
    h_max: float = 5e-3
    corrector_tol: float = 0.2  # largest accepted correction, as a fraction of the step
    eps_deg: float = 1e-7
    wall_tol: float = 1e-11
    max_steps: int = 2_000_000
    max_turn: float = 0.05  # radians of tangent rotation per step
    oracle_grid: int | None = 16  # loop discovery; None disables it

    def scaled(self, perimeter: float) -> dict:
        return {
            "h0": self.h0 * perimeter,
            "h_max": self.h_max * perimeter,
            "eps_deg": self.eps_deg * perimeter,
            "wtol": self.wall_tol * perimeter,
        }


@dataclass(frozen=True)
class Sample:
    rect: LabeledRectangle
    quad: tuple[int, int, int, int]
    t: tuple[float, float, float, float]
    arclen: float
    # vertex velocities (max-norm 1) arriving at and leaving the sample; they
    # differ only where the walk switches charts
    vin: tuple[Point, Point, Point, Point] | None = None
    vout: tuple[Point, Point, Point, Point] | None = None

    @property
    def X(self) -> float:
        return self.rect.X

    @property
    def Y(self) -> float:
        return self.rect.Y


@dataclass
class ArcComponent:
    samples: list[Sample]
    cls: str  # Hyperbolic | NullX | NullY | Loop
    endpoints: tuple[Diameter | None, Diameter | None] = (None, None)
    shift: int = 0
    orbit: int = 0
    flags: list[str] = field(default_factory=list)

    @property
    def is_arc(self) -> bool:
        return self.cls != "Loop"

    @property
    def length(self) -> float:
        return self.samples[-1].arclen

    @property
    def orientation(self) -> int:
        """Label orientation of the rectangles (+1 counterclockwise)."""
        mid = self.samples[len(self.samples) // 2].rect
        return mid.orientation or 1

    def inscribing(self) -> list[tuple[int, int, int, int]]:
        out = []
        for s in self.samples:
            if not out or out[-1] != s.quad:
                out.append(s.quad)
        return out

    def shape_points(self) -> list[tuple[float, float]]:
        return [(s.X, s.Y) for s in self.samples]

    def to_json(self) -> dict:
        ends = []
        for d in self.endpoints:
            ends.append(None if d is None else [list(d.q1.point), list(d.q2.point)])
        return {
            "class": self.cls,
            "shift": self.shift,
            "orbit": self.orbit,
            "endpoints": ends,
            "flags": list(self.flags),
            "samples": [s.rect.as_row() for s in self.samples],
            "inscribing": [list(q) for q in self.inscribing()],
        }


@dataclass(frozen=True)
class Seed:
    rect: LabeledRectangle
    params: tuple[float, float, float, float]  # boundary parameters of the four vertices
    diameter: Diameter
    shift: int


def seed_rectangles(poly: Polygon, d: Diameter) -> list[Seed]:
    """The four cyclic labelings of the doubled diameter, starting with (q1,q1,q2,q2)."""
    p1, p2 = d.q1.point, d.q2.point
    s1, s2 = d.q1.s, d.q2.s
    base = LabeledRectangle((p1, p1, p2, p2))
    params = (s1, s1, s2, s2)
    out = []
    for k in range(4):
        out.append(Seed(base.shift(k), params[k:] + params[:k], d, k))
    return out


# --- chart bookkeeping ----------------------------------------------------

class ChartCache:
    def __init__(self, poly: Polygon):
        self.poly = poly
        self._charts: dict = {}

    def get(self, idx: tuple[int, int, int, int]) -> Chart | None:
        if idx not in self._charts:
            try:
                self._charts[idx] = build_chart(EdgeQuadruple.from_polygon(self.poly, idx))
            except AllParallelToL4:
                self._charts[idx] = None
        return self._charts[idx]


def _params3(chart: Chart, rect: LabeledRectangle):
    return chart.params_of(rect)


def _boundary_params(poly: Polygon, quad, t4) -> tuple[float, ...]:
    per = poly.perimeter
    return tuple((poly.cum[quad[j]] + t4[j]) % per for j in range(4))


def _candidate_directions(chart: Chart, t):
    if chart.kind in LINE_KINDS:
        brs = chart.branches_through(t)
        dirs = [b.direction for b in brs]
    else:
        try:
            dirs = [chart.tangent_at(t)]
        except SingularPoint:
            return []
    out = []
    for d in dirs:
        out.append(d)
        out.append((-d[0], -d[1], -d[2]))
    return out


def _direction_ok(chart: Chart, t, d, wtol, ties=(), strict_slots=(), margin=1e-9) -> bool:
    p = chart.params4(t)
    dp = (d[0], d[1], d[2], chart.dt4(d))
    lens = chart.lengths
    for j in range(4):
        need = margin if j in strict_slots else -1e-12
        if abs(p[j]) <= wtol and dp[j] <= need:
            return False
        if abs(p[j] - lens[j]) <= wtol and -dp[j] <= need:
            return False
    for j in ties:
        if dp[(j + 1) % 4] - dp[j] <= margin:
            return False
    return True


def initial_chart(poly: Polygon, seed: Seed, cache: ChartCache | None = None, wtol: float | None = None):
    """Viable ``(quad, t, direction)`` starts for a degenerate seed rectangle."""
    cache = cache or ChartCache(poly)
    if wtol is None:
        wtol = 1e-9 * poly.perimeter
    per = poly.perimeter
    options = []
    for s in seed.params:
        e = poly.edge_of(s)
        t = (s - poly.cum[e]) % per
        if t > poly.lengths[e] - wtol:
            e, t = (e + 1) % poly.n, 0.0
        if t <= wtol:
            prev = (e - 1) % poly.n
            options.append([(prev, poly.lengths[prev]), (e, 0.0)])
        else:
            options.append([(e, t)])
    ties = [j for j in range(4) if abs(((seed.params[(j + 1) % 4] - seed.params[j] + per / 2) % per) - per / 2) <= wtol]
    viable = []
    for combo in itertools.product(*options):
        idx = tuple(c[0] for c in combo)
        chart = cache.get(idx)
        if chart is None:
            continue
        t = tuple(c[1] for c in combo[:3])
        if abs(chart.pi(t)) > 1e3 * chart.eps_alg or abs(chart.q(t)) > 1e3 * chart.eps_alg:
            continue
        for d in _candidate_directions(chart, t):
            if _direction_ok(chart, t, d, wtol, ties=ties):
                viable.append((idx, t, d))
    return viable


def chart_transition(poly: Polygon, quad: tuple[int, int, int, int], slot: int, side: int) -> tuple[int, int, int, int]:
    """Swap the edge in ``slot`` for its neighbour across the polygon vertex just reached."""
    idx = list(quad)
    idx[slot] = (idx[slot] + (1 if side == 1 else -1)) % poly.n
    return tuple(idx)


# --- the walker -------------------------------------------------------------

def _velocity(chart: Chart, d):
    dp = (d[0], d[1], d[2], chart.dt4(d))
    sp = max(abs(x) for x in dp)
    u = chart.quad.directions
    return tuple(Point(u[j].x * dp[j] / sp, u[j].y * dp[j] / sp) for j in range(4))


def _lin(a, b, s):
    return (a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2]))


def _d3(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _gap_plane(poly: Polygon, chart: Chart, quad, j: int):
    """Affine form ``w.t + w0`` of t_{j+1} - t_j plus the edge offset (unwrapped)."""
    k = (j + 1) % 4
    w = [0.0, 0.0, 0.0]
    w0 = poly.cum[quad[k]] - poly.cum[quad[j]]
    for slot, sign in ((k, 1.0), (j, -1.0)):
        if slot < 3:
            w[slot] += sign
        else:
            c = chart.t4c
            w[0] += sign * c[1]
            w[1] += sign * c[2]
            w[2] += sign * c[3]
            w0 += sign * c[0]
    return tuple(w), w0


def _wrap(g, per):
    return (g + per / 2) % per - per / 2


class _Walker:
    def __init__(self, poly: Polygon, config: TraceConfig, cache: ChartCache):
        self.poly = poly
        self.cfg = config
        self.cache = cache
        sc = config.scaled(poly.perimeter)
        self.h0, self.h_max = sc["h0"], sc["h_max"]
        self.ctol = config.corrector_tol
        self.eps_deg, self.wtol = sc["eps_deg"], sc["wtol"]
        self.cos_turn = math.cos(config.max_turn)

    def _event_point(self, chart, branch, t, nt, w, b):
        f0 = sum(w[i] * t[i] for i in range(3)) - b
        f1 = sum(w[i] * nt[i] for i in range(3)) - b
        frac = f0 / (f0 - f1) if f0 != f1 else 0.0
        guess = _lin(t, nt, frac)
        if branch is not None:
            return guess  # exact: straight branch, affine event function
        hits = chart.hyperplane_hits(w, b)
        if not hits:
            return guess
        best = min(hits, key=lambda q: _d3(q, guess))
        if _d3(best, guess) > 2 * _d3(t, nt) + self.eps_deg:
            return guess
        return best

    def _sample(self, chart, quad, t, arclen, d=None) -> Sample:
        v = None if d is None else _velocity(chart, d)
        return Sample(chart.rectangle(t), quad, chart.params4(t), arclen, v, v)

    def _tangent(self, chart, t, prefer):
        try:
            return chart.tangent_at(t, prefer=prefer)
        except SingularPoint:
            return prefer

    def _pick_direction(self, chart, t, slot_req, prefer):
        cands = _candidate_directions(chart, t)
        good = [d for d in cands if _direction_ok(chart, t, d, 10 * self.wtol, strict_slots=slot_req)]
        if not good:
            return None
        if prefer is not None and len(good) > 1:
            good.sort(key=lambda d: -sum(a * b for a, b in zip(d, prefer)))
        return good[0]

    def _transition(self, quad, rect, slot, side, prev_dir_rect):
        """Hand the walk over to the neighbouring chart(s); returns (quad, chart, t, d)."""
        poly = self.poly
        pending = [(slot, side)]
        done = set()
        for _ in range(6):
            for sl, sd in pending:
                quad = chart_transition(poly, quad, sl, sd)
                done.add(sl)
            chart = self.cache.get(quad)
            if chart is None:
                raise DeadEnd(f"quadruple {quad} cannot be charted at {rect.vertices}")
            t = _params3(chart, rect)
            if abs(chart.q(t)) > 1e4 * chart.eps_alg or abs(chart.pi(t)) > 1e4 * chart.eps_alg:
                raise DeadEnd(f"rectangle not on the chart of {quad}")
            d = self._pick_direction(chart, t, done, prev_dir_rect)
            if d is not None:
                return quad, chart, t, d
            # another slot sits on a wall and points outward: transition it as well
            pending = []
            p = chart.params4(t)
            cands = _candidate_directions(chart, t)
            for d in cands:
                if not _direction_ok(chart, t, d, 10 * self.wtol, strict_slots=done):
                    dp = (d[0], d[1], d[2], chart.dt4(d))
                    ok_done = all(
                        (abs(p[j]) > 10 * self.wtol or dp[j] > 0) and (abs(p[j] - chart.lengths[j]) > 10 * self.wtol or dp[j] < 0)
                        for j in done
                    )
                    if not ok_done:
                        continue
                    for j in range(4):
                        if j in done:
                            continue
                        if abs(p[j]) <= 10 * self.wtol and dp[j] < 0:
                            pending.append((j, 0))
                        elif abs(p[j] - chart.lengths[j]) <= 10 * self.wtol and dp[j] > 0:
                            pending.append((j, 1))
                    if pending:
                        pending = pending[:1]
                        break
            if not pending:
                raise DeadEnd(f"no in-box continuation at {rect.vertices} in {quad}")
        raise DeadEnd(f"transition did not settle at {rect.vertices}")

    def walk(self, quad, t, d, start_kind: str | None, loop: bool = False):
        """Follow the curve from ``t`` along ``d``.

        Returns (samples, terminal_kind) where terminal_kind is 'X', 'Y' or 'Loop'.
        """
        poly, per = self.poly, self.poly.perimeter
        chart = self.cache.get(quad)
        branch = chart.branch_at(t) if chart.kind in LINE_KINDS else None
        samples = [self._sample(chart, quad, t, 0.0, d)]
        start_t, start_quad = t, quad
        arclen = 0.0
        h = self.h0
        clean = 0
        steps = 0
        while True:
            steps += 1
            if steps > self.cfg.max_steps:
                raise StepBudgetExhausted(f"more than {self.cfg.max_steps} steps")
            speed = chart.rect_speed(d)
            # predictor / corrector
            while True:
                dt = h / speed
                if branch is not None:
                    nt = (t[0] + dt * d[0], t[1] + dt * d[1], t[2] + dt * d[2])
                    nd = d
                    break
                res = chart.correct((t[0] + dt * d[0], t[1] + dt * d[1], t[2] + dt * d[2]))
                ok = res is not None and res[1] <= self.ctol * h
                if ok:
                    nt = res[0]
                    try:
                        nd = chart.tangent_at(nt, prefer=d)
                    except SingularPoint:
                        ok = False
                    else:
                        ok = sum(a * b for a, b in zip(nd, d)) >= self.cos_turn
                if ok:
                    # the corrector may lengthen the step slightly; keep it within h_max
                    step = rect_distance(chart.rectangle(t), chart.rectangle(nt))
                    if step <= self.h_max:
                        break
                    h *= 0.95 * self.h_max / step
                    continue
                h *= 0.5
                clean = 0
                if h < 1e-13 * per:
                    raise CorrectorDivergence(f"step collapsed near {chart.rectangle(t).vertices}")
            # events
            p0, p1 = chart.params4(t), chart.params4(nt)
            events = []
            for j in range(4):
                lj = chart.lengths[j]
                if p1[j] < -self.wtol and p0[j] >= -self.wtol:
                    events.append(("wall", j, 0))
                elif p1[j] > lj + self.wtol and p0[j] <= lj + self.wtol:
                    events.append(("wall", j, 1))
            for j, kind in ((0, "X"), (1, "Y")):
                w, w0 = _gap_plane(poly, chart, quad, j)
                g0 = w[0] * t[0] + w[1] * t[1] + w[2] * t[2] + w0
                g1 = w[0] * nt[0] + w[1] * nt[1] + w[2] * nt[2] + w0
                k = round((g0 - _wrap(g0, per)) / per)
                g0 -= k * per
                g1 -= k * per
                if g0 > self.eps_deg * 1e-3 and g1 <= 0 and g0 < per / 4:
                    events.append(("deg", j, kind, w, -w0 - k * per))
            located = []
            for ev in events:
                w, b = chart.wall(ev[1], ev[2]) if ev[0] == "wall" else (ev[3], ev[4])
                te = self._event_point(chart, branch, t, nt, w, b)
                located.append((_d3(te, t), ev, te))
            # loop closure: the start lies (nearly) on this step, ahead of any event
            if loop and quad == start_quad and arclen > 20 * self.h_max:
                a = _d3(t, start_t)
                if a <= _d3(t, nt) * 1.01 and all(a <= x[0] * 1.01 for x in located):
                    s = self._sample(chart, quad, start_t, 0.0, self._tangent(chart, start_t, d))
                    arclen += rect_step(samples[-1].rect, s.rect)
                    samples.append(replace(s, arclen=arclen))
                    return samples, "Loop"
            if located:
                located.sort(key=lambda x: x[0])
                first = located[0][0]
                deg = [x for x in located if x[1][0] == "deg" and x[0] <= first + 1e-3 * self.eps_deg + 1e-9 * _d3(t, nt)]
                dist_ev, ev, te = deg[0] if deg else located[0]
                rect_prev = samples[-1].rect
                s = self._sample(chart, quad, te, 0.0, self._tangent(chart, te, d))
                arclen += rect_step(rect_prev, s.rect)
                samples.append(replace(s, arclen=arclen))
                if ev[0] == "deg":
                    return samples, ev[2]
                # a loop may close exactly on a wall, where the check below never runs
                if loop and arclen > 20 * self.h_max and rect_distance(s.rect, samples[0].rect) <= 1e-6 * self.h_max:
                    return samples, "Loop"
                # degenerate exactly at a polygon vertex: the gap and the wall coincide
                if min(s.rect.X, s.rect.Y) <= self.eps_deg and arclen > 10 * self.eps_deg:
                    return samples, "X" if s.rect.X <= s.rect.Y else "Y"
                # wall: swap charts
                vel = d
                quad, chart, t, d = self._transition(quad, s.rect, ev[1], ev[2], None)
                branch = chart.branch_at(t) if chart.kind in LINE_KINDS else None
                samples[-1] = replace(samples[-1], vout=_velocity(chart, d))
                h = max(h, self.h0 * 0.1)
                clean = 0
                continue
            s = self._sample(chart, quad, nt, 0.0, nd)
            arclen += rect_step(samples[-1].rect, s.rect)
            samples.append(replace(s, arclen=arclen))
            t, d = nt, nd
            clean += 1
            if clean >= 4:
                h = min(h * 1.5, self.h_max)
                clean = 0


# --- components -------------------------------------------------------------

def _endpoint_chord(rect: LabeledRectangle, kind: str):
    v = rect.vertices
    if kind == "X":  # R1 = R2, R3 = R4
        return v[1], v[2]
    return v[0], v[1]  # Y = 0: R2 = R3, R1 = R4


def _match(diams: Iterable[Diameter], chord, tol) -> Diameter | None:
    a, b = chord
    best, best_err = None, math.inf
    for d in diams:
        p, q = d.endpoints()
        err = min(max(dist(a, p), dist(b, q)), max(dist(a, q), dist(b, p)))
        if err < best_err:
            best, best_err = d, err
    return best if best_err <= tol else None


def _start_kind(rect: LabeledRectangle) -> str:
    return "X" if rect.X <= rect.Y else "Y"


def _classify(k0: str, k1: str) -> str:
    if k0 != k1:
        return "Hyperbolic"
    # X = 0 at both ends: both shape points on the Y axis
    return "NullY" if k0 == "X" else "NullX"


def _reverse(samples: list[Sample]) -> list[Sample]:
    total = samples[-1].arclen
    return [replace(s, arclen=total - s.arclen, vin=_neg(s.vout), vout=_neg(s.vin)) for s in reversed(samples)]


def _neg(v):
    return None if v is None else tuple(Point(-p.x, -p.y) for p in v)


def _rot(v, k):
    return None if v is None else v[k:] + v[:k]


def shift_sample(poly: Polygon, s: Sample, k: int) -> Sample:
    k %= 4
    return Sample(s.rect.shift(k), s.quad[k:] + s.quad[:k], s.t[k:] + s.t[:k], s.arclen, _rot(s.vin, k), _rot(s.vout, k))


def _canonical(poly: Polygon, comp: ArcComponent) -> ArcComponent:
    if comp.is_arc:
        def r1param(s: Sample):
            x = (poly.cum[s.quad[0]] + s.t[0]) % poly.perimeter
            return 0.0 if x > poly.perimeter * (1 - 1e-9) else x

        if r1param(comp.samples[-1]) < r1param(comp.samples[0]) - 1e-12 * poly.perimeter:
            comp.samples = _reverse(comp.samples)
            comp.endpoints = (comp.endpoints[1], comp.endpoints[0])
    else:
        body = comp.samples[:-1]
        i = min(range(len(body)), key=lambda k: (round(body[k].X, 12), round(body[k].Y, 12)))
        rot = body[i:] + body[:i] + [body[i]]
        arc = [0.0]
        for a, b in zip(rot, rot[1:]):
            arc.append(arc[-1] + rect_step(a.rect, b.rect))
        comp.samples = [replace(s, arclen=x) for s, x in zip(rot, arc)]
    return comp


def shift_component(poly: Polygon, comp: ArcComponent, k: int) -> ArcComponent:
    k %= 4
    cls = comp.cls
    if k % 2 == 1 and cls in ("NullX", "NullY"):
        cls = "NullY" if cls == "NullX" else "NullX"
    out = ArcComponent(
        [shift_sample(poly, s, k) for s in comp.samples],
        cls,
        comp.endpoints,
        (comp.shift + k) % 4,
        comp.orbit,
        list(comp.flags),
    )
    return _canonical(poly, out)


def continue_component(
    poly: Polygon,
    seed: Seed,
    config: TraceConfig = TraceConfig(),
    diameters: DiameterReport | None = None,
    cache: ChartCache | None = None,
) -> ArcComponent:
    """Trace the arc of gracing rectangles leaving a degenerate seed."""
    cache = cache or ChartCache(poly)
    diameters = diameters or find_diameters(poly)
    walker = _Walker(poly, config, cache)
    starts = initial_chart(poly, seed, cache)
    if not starts:
        raise NoViableChart(f"no chart leaves seed {seed.rect.vertices}")
    flags = []
    if len(starts) > 1:
        flags.append(f"{len(starts)} viable start charts")
    quad, t, d = starts[0]
    k0 = _start_kind(seed.rect)
    samples, k1 = walker.walk(quad, t, d, k0)
    # exact seed rectangle as first sample
    samples[0] = replace(samples[0], rect=seed.rect)
    tol = 10 * walker.eps_deg
    end = _match(diameters.positive, _endpoint_chord(samples[-1].rect, k1), tol)
    if end is None:
        raise UnmatchedTerminalDiameter(
            f"arc from {seed.rect.vertices} ended at non-positive chord {_endpoint_chord(samples[-1].rect, k1)}"
        )
    comp = ArcComponent(samples, _classify(k0, k1), (seed.diameter, end), 0, 0, flags)
    return comp


def trace_loop(poly: Polygon, rect: LabeledRectangle, params, config: TraceConfig, cache: ChartCache, diameters):
    """Trace the component through a non-degenerate gracing rectangle."""
    per = poly.perimeter
    walker = _Walker(poly, config, cache)
    quad = tuple(poly.edge_of(s) for s in params)
    chart = cache.get(quad)
    if chart is None:
        raise DeadEnd(f"cannot chart {quad}")
    t = _params3(chart, rect)
    res = chart.correct(t)
    if res is not None:
        t = res[0]
    dirs = _candidate_directions(chart, t)
    if not dirs:
        raise DeadEnd("no tangent at oracle seed")
    samples, kind = walker.walk(quad, t, dirs[0], None, loop=True)
    if kind == "Loop":
        return ArcComponent(samples, "Loop")
    # ran into a degenerate end: walk the other way and splice
    back, kind2 = walker.walk(quad, t, dirs[1], None)
    full = _reverse(back)[:-1]
    offset = full[-1].arclen if full else 0.0
    joined = full + [replace(s, arclen=s.arclen + offset + rect_step(full[-1].rect, samples[0].rect) if full else s.arclen) for s in samples]
    tol = 10 * walker.eps_deg
    e0 = _match(diameters.positive, _endpoint_chord(joined[0].rect, kind2), tol)
    e1 = _match(diameters.positive, _endpoint_chord(joined[-1].rect, kind), tol)
    comp = ArcComponent(joined, _classify(kind2, kind), (e0, e1), flags=["found by oracle"])
    return comp


def segment_chart(cache: ChartCache, comp: ArcComponent, k: int) -> Chart | None:
    """Chart containing the step from sample ``k`` to ``k + 1``.

    At a chart switch one endpoint is the wall sample shared by both charts;
    the step belongs to the chart whose box holds both rectangles.
    """
    a, b = comp.samples[k], comp.samples[k + 1]
    cands = [a.quad] if a.quad == b.quad else [b.quad, a.quad]
    tol = 1e-9 * cache.poly.perimeter
    for q in cands:
        chart = cache.get(q)
        if chart is None:
            continue
        if all(chart.in_box(chart.params_of(s.rect), tol) for s in (a, b)):
            return chart
    return cache.get(cands[0])


def inscribing_sequence(comp: ArcComponent, n_edges: int | None = None) -> list[tuple[int, int, int, int]]:
    """Run-length-compressed chart sequence, checked against the per-chart repeat bound."""
    seq = comp.inscribing()
    counts: dict = {}
    for q in seq:
        counts[q] = counts.get(q, 0) + 1
    worst = max(counts.values()) if counts else 0
    if worst > 64:
        raise RepeatBoundViolated(f"a quadruple recurs {worst} times along one component")
    if n_edges is not None and len(seq) > 64 * n_edges ** 4:
        raise RepeatBoundViolated("inscribing sequence longer than 64 N^4")
    return seq


def _same_component(a: ArcComponent, b: ArcComponent, tol: float) -> bool:
    if len(a.samples) < 2 or len(b.samples) < 2:
        return False
    if rect_distance(a.samples[0].rect, b.samples[0].rect) > tol or rect_distance(a.samples[-1].rect, b.samples[-1].rect) > tol:
        return False
    ma = a.samples[len(a.samples) // 2].rect
    return min(rect_distance(ma, s.rect) for s in b.samples) <= max(tol, 2 * a.length / max(len(a.samples), 1) + tol)


def _is_endpoint(comps: list[ArcComponent], rect: LabeledRectangle, tol: float) -> bool:
    for c in comps:
        if not c.is_arc:
            continue
        if rect_distance(c.samples[0].rect, rect) <= tol or rect_distance(c.samples[-1].rect, rect) <= tol:
            return True
    return False


def _orbit(poly, comp, orbit_id) -> list[ArcComponent]:
    comp.orbit = orbit_id
    comp = _canonical(poly, comp)
    return [comp] + [shift_component(poly, comp, k) for k in (1, 2, 3)]


def trace_all(
    poly: Polygon,
    config: TraceConfig = TraceConfig(),
    diameters: DiameterReport | None = None,
    oracle_hits: list | None = None,
) -> list[ArcComponent]:
    """All components of the gracing-rectangle space, with their Z/4 relabelings."""
    diameters = diameters or find_diameters(poly)
    if diameters.tricky:
        raise TrickyDiameter(
            "polygon has tricky diameters (vertex chords with a perpendicular incident edge); tracing requires none"
        )
    cache = ChartCache(poly)
    sc = config.scaled(poly.perimeter)
    tol = 10 * sc["eps_deg"]
    comps: list[ArcComponent] = []
    orbit = 0
    for d in diameters.positive:
        for seed in seed_rectangles(poly, d):
            if _is_endpoint(comps, seed.rect, tol):
                continue
            arc = continue_component(poly, seed, config, diameters, cache)
            for c in _orbit(poly, arc, orbit):
                if not any(_same_component(c, o, tol) for o in comps):
                    comps.append(c)
            orbit += 1
    if oracle_hits is None and config.oracle_grid:
        from .oracle import sample_all

        oracle_hits = sample_all(poly, config.oracle_grid)
    if oracle_hits:
        from .oracle import unmatched_hits

        for _ in range(16):
            missing = unmatched_hits(poly, oracle_hits, comps, 10 * sc["h_max"])
            if not missing:
                break
            rect, params = missing[0]
            loop = trace_loop(poly, rect, params, config, cache, diameters)
            for c in _orbit(poly, loop, orbit):
                comps.append(c)
            orbit += 1
    comps.sort(key=lambda c: (c.orbit, c.shift))
    return comps


def graces(poly: Polygon, s: Sample) -> bool:
    params = _boundary_params(poly, s.quad, s.t)
    return cyclic_order_ok(params, poly.perimeter, directed=True, tol=1e-9 * poly.perimeter)
