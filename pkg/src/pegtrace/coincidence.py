"""Isometric rectangle coincidences from shape-curve crossings, and the count M(P)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .charts import LINE_KINDS
from .diameters import DiameterReport, find_diameters
from .geometry import LabeledRectangle, Polygon, distance_to_boundary, rect_distance
from .tracer import ArcComponent, ChartCache, segment_chart

LOW_ANGLE = 1e-4


class NotConverged(RuntimeError):
    pass


class NotReallyDistinct(ValueError):
    pass


def really_distinct(a: LabeledRectangle, b: LabeledRectangle, tol: float) -> bool:
    """False iff some relabeling of ``b`` (cyclic shift, possibly reversed) matches ``a``."""
    for cand in (b, b.reversed()):
        for k in range(4):
            if rect_distance(a, cand.shift(k)) <= tol:
                return False
    return True


@dataclass(frozen=True)
class Participant:
    component: int
    segment: int
    param: float  # position inside the segment, 0..1
    rect: LabeledRectangle


@dataclass
class Crossing:
    a: int  # component index
    ia: int  # segment index
    la: float
    b: int
    ib: int
    lb: float
    point: tuple[float, float]
    angle: float


@dataclass
class Coincidence:
    X: float
    Y: float
    participants: list[Participant]
    low_confidence: bool = False

    @property
    def n(self) -> int:
        return len(self.participants)

    @property
    def multiplicity(self) -> int:
        return max(self.n - 1, 0)

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "Y": self.Y,
            "mu": self.multiplicity,
            "low_confidence": self.low_confidence,
            "participants": [
                {"component": p.component, "segment": p.segment, "rect": [list(v) for v in p.rect.vertices]}
                for p in self.participants
            ],
        }


@dataclass
class CoincidenceReport:
    coincidences: list[Coincidence]
    M: int
    delta_plus: int
    M_orbits: int | None = None
    infinite: list = field(default_factory=list)
    low_confidence: int = 0

    @property
    def bound_generic(self) -> int:
        return 2 * (self.delta_plus - 2)

    @property
    def bound_nontricky(self) -> int:
        return math.ceil((self.delta_plus - 2) / 16)

    @property
    def pass_generic(self) -> bool:
        return self.M >= self.bound_generic

    @property
    def pass_nontricky(self) -> bool:
        return self.M >= self.bound_nontricky

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "M_orbit_representatives": self.M_orbits,
            "delta_plus": self.delta_plus,
            "bound_generic": self.bound_generic,
            "bound_nontricky": self.bound_nontricky,
            "pass_generic": self.pass_generic,
            "pass_nontricky": self.pass_nontricky,
            "low_confidence": self.low_confidence,
            "infinite_families": self.infinite,
            "clusters": [c.to_json() for c in self.coincidences],
        }


# --- segment sweep ------------------------------------------------------------------

def _curve(comp: ArcComponent) -> np.ndarray:
    return np.array([(s.X, s.Y) for s in comp.samples], dtype=float)


def _segments(curves: list[np.ndarray]):
    P0, P1, owner, index = [], [], [], []
    for c, pts in enumerate(curves):
        if len(pts) < 2:
            continue
        P0.append(pts[:-1])
        P1.append(pts[1:])
        owner.append(np.full(len(pts) - 1, c))
        index.append(np.arange(len(pts) - 1))
    return np.concatenate(P0), np.concatenate(P1), np.concatenate(owner), np.concatenate(index)


def _crossings(curves, closed, pair_ok, axis_tol) -> list[Crossing]:
    """Transversal crossings between polyline segments, half-open to avoid double hits."""
    if not curves:
        return []
    P0, P1, owner, index = _segments(curves)
    D = P1 - P0
    L = np.hypot(D[:, 0], D[:, 1])
    mid = 0.5 * (P0 + P1)
    r = float(L.max()) if len(L) else 0.0
    if r == 0.0:
        return []
    pairs = cKDTree(mid).query_pairs(r * 1.0000001, output_type="ndarray")
    if len(pairs) == 0:
        return []
    i, j = pairs[:, 0], pairs[:, 1]
    oi, oj = owner[i], owner[j]
    keep = np.array([pair_ok(a, b) for a, b in zip(oi, oj)], dtype=bool)
    # neighbouring segments of one curve share an endpoint
    same = oi == oj
    nseg = np.array([len(c) - 1 for c in curves])
    gap = np.abs(index[i] - index[j])
    wrap = np.array([closed[c] for c in oi]) & (gap == nseg[oi] - 1)
    keep &= ~(same & ((gap <= 1) | wrap))
    i, j = i[keep], j[keep]
    d1, d2 = D[i], D[j]
    den = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    w = P0[j] - P0[i]
    ok = np.abs(den) > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        la = (w[:, 0] * d2[:, 1] - w[:, 1] * d2[:, 0]) / den
        lb = (w[:, 0] * d1[:, 1] - w[:, 1] * d1[:, 0]) / den
    hit = ok & (la >= 0) & (la < 1) & (lb >= 0) & (lb < 1)
    out = []
    for k in np.nonzero(hit)[0]:
        a, b = int(i[k]), int(j[k])
        pt = P0[a] + la[k] * D[a]
        if min(pt) <= axis_tol:
            continue
        sin = abs(den[k]) / (L[a] * L[b])
        out.append(Crossing(int(owner[a]), int(index[a]), float(la[k]), int(owner[b]), int(index[b]), float(lb[k]), (float(pt[0]), float(pt[1])), math.asin(min(1.0, sin))))
    return out


def curve_intersections(za: np.ndarray, zb: np.ndarray, axis_tol: float = 0.0) -> list[tuple[int, float, int, float]]:
    """Crossings of two sampled shape curves as (segment a, lambda, segment b, mu)."""
    cr = _crossings([za, zb], [False, False], lambda a, b: a != b, axis_tol)
    out = []
    for c in cr:
        if c.a == 0:
            out.append((c.ia, c.la, c.ib, c.lb))
        else:
            out.append((c.ib, c.lb, c.ia, c.la))
    return out


def self_intersections(z: np.ndarray, closed: bool = False, axis_tol: float = 0.0) -> list[tuple[int, float, int, float]]:
    cr = _crossings([z], [closed], lambda a, b: True, axis_tol)
    return [(c.ia, c.la, c.ib, c.lb) for c in cr]


# --- refinement ---------------------------------------------------------------------

class _Local:
    """Curve of one component near segment k, parametrized by chord position."""

    def __init__(self, cache: ChartCache, comp: ArcComponent, k: int):
        s0, s1 = comp.samples[k], comp.samples[k + 1]
        self.chart = segment_chart(cache, comp, k)
        if self.chart is None:
            raise NotConverged("segment lies in an uncharted quadruple")
        self.t0 = self.chart.params_of(s0.rect)
        self.t1 = self.chart.params_of(s1.rect)
        self.line = self.chart.kind in LINE_KINDS

    def point(self, lam: float):
        t0, t1 = self.t0, self.t1
        p = tuple(t0[i] + lam * (t1[i] - t0[i]) for i in range(3))
        if not self.line:
            res = self.chart.correct(p)
            if res is None:
                raise NotConverged("corrector failed during refinement")
            p = res[0]
        return p

    def xy(self, lam: float):
        r = self.chart.rectangle(self.point(lam))
        return np.array([r.X, r.Y]), r


def _newton(A: _Local, B: _Local, la: float, lb: float, tol: float):
    """Iterate well past ``tol`` so shallow crossings land on one point; accept at ``tol``."""
    eps = 1e-7
    best = None
    for _ in range(40):
        za, ra = A.xy(la)
        zb, rb = B.xy(lb)
        F = za - zb
        err = np.abs(F).sum()
        if best is None or err < best[0]:
            best = (err, la, lb, za, zb, ra, rb)
        if err <= 1e-6 * tol:
            break
        Ja = (A.xy(la + eps)[0] - za) / eps
        Jb = (B.xy(lb + eps)[0] - zb) / eps
        try:
            step = np.linalg.solve(np.column_stack([Ja, -Jb]), -F)
        except np.linalg.LinAlgError:
            break
        step = np.clip(step, -0.5, 0.5)
        if np.abs(step).max() < 1e-15:
            break
        la, lb = la + step[0], lb + step[1]
    if best[0] > tol:
        raise NotConverged("crossing refinement did not converge")
    return best[1:]


def _moved(comp: ArcComponent, k: int, lam: float):
    """Neighbouring segment when the solution fell off the end of segment ``k``."""
    last = len(comp.samples) - 2
    if lam > 1.0 + 1e-9:
        if k < last:
            return k + 1, lam - 1.0
        if not comp.is_arc:
            return 0, lam - 1.0
    elif lam < -1e-9:
        if k > 0:
            return k - 1, lam + 1.0
        if not comp.is_arc:
            return last, lam + 1.0
    return None


def refine_coincidence(poly: Polygon, cache: ChartCache, comps, cr: Crossing, tol: float | None = None):
    """Newton on (X_a - X_b, Y_a - Y_b) = 0 in the two local parametrizations."""
    tol = 1e-9 * poly.perimeter if tol is None else tol
    ia, ib, la, lb = cr.ia, cr.ib, cr.la, cr.lb
    for _ in range(4):
        A = _Local(cache, comps[cr.a], ia)
        B = _Local(cache, comps[cr.b], ib)
        la, lb, za, zb, ra, rb = _newton(A, B, la, lb, tol)
        ma, mb = _moved(comps[cr.a], ia, la), _moved(comps[cr.b], ib, lb)
        if ma is None and mb is None:
            break
        if ma is not None:
            ia, la = ma
        if mb is not None:
            ib, lb = mb
    else:
        raise NotConverged("crossing wandered across segments")
    for rect in (ra, rb):
        if max(distance_to_boundary(poly, v) for v in rect.vertices) > poly.eps_geo:
            raise NotConverged("refined rectangle left the boundary")
    if not really_distinct(ra, rb, 1e3 * tol):
        raise NotReallyDistinct("crossing is a relabeling of one rectangle")
    z = 0.5 * (za + zb)
    return (
        float(z[0]),
        float(z[1]),
        [Participant(cr.a, ia, la, ra), Participant(cr.b, ib, lb, rb)],
        cr.angle < LOW_ANGLE,
    )


# --- counting ---------------------------------------------------------------------------

def _cluster(found, tol) -> list[Coincidence]:
    if not found:
        return []
    pts = np.array([(f[0], f[1]) for f in found])
    parent = list(range(len(found)))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in cKDTree(pts).query_pairs(tol, p=np.inf):
        parent[root(i)] = root(j)
    groups: dict = {}
    for i in range(len(found)):
        groups.setdefault(root(i), []).append(i)
    out = []
    rtol = 1e3 * tol
    for members in groups.values():
        distinct: list[Participant] = []
        low = False
        for i in members:
            low |= found[i][3]
            for p in found[i][2]:
                if all(really_distinct(p.rect, q.rect, rtol) for q in distinct):
                    distinct.append(p)
        xy = pts[members].mean(axis=0)
        out.append(Coincidence(float(xy[0]), float(xy[1]), distinct, low))
    out.sort(key=lambda c: (round(c.X, 9), round(c.Y, 9)))
    return out


def _shift_of(comps, a: int, b: int) -> int | None:
    ca, cb = comps[a], comps[b]
    if ca.orbit != cb.orbit:
        return None
    return (cb.shift - ca.shift) % 4


def _find(poly, comps, pair_ok, cache, tol):
    curves = [_curve(c) for c in comps]
    closed = [not c.is_arc for c in comps]
    axis_tol = 1e-6 * poly.perimeter
    found = []
    for cr in _crossings(curves, closed, pair_ok, axis_tol):
        try:
            found.append(refine_coincidence(poly, cache, comps, cr, tol))
        except (NotConverged, NotReallyDistinct):
            continue
    return found


def _expand(found):
    """Images of each coincidence under the Z/4 relabeling action."""
    out = []
    for X, Y, parts, low in found:
        for k in range(4):
            xy = (X, Y) if k % 2 == 0 else (Y, X)
            out.append((xy[0], xy[1], [Participant(p.component, p.segment, p.param, p.rect.shift(k)) for p in parts], low))
    return out


def count_M(
    poly: Polygon,
    comps: list[ArcComponent],
    diameters: DiameterReport | None = None,
    both_ways: bool = True,
) -> CoincidenceReport:
    """M(P) as the sum over (X, Y) clusters of (really distinct rectangles - 1)."""
    diameters = diameters or find_diameters(poly)
    cache = ChartCache(poly)
    tol = 1e-9 * poly.perimeter
    ctol = 1e3 * tol

    def all_pairs(a, b):
        # a component and its half-turn relabeling share the shape curve
        return _shift_of(comps, a, b) != 2

    found = _find(poly, comps, all_pairs, cache, tol)
    clusters = [c for c in _cluster(found, ctol) if c.n >= 2]
    M = sum(c.multiplicity for c in clusters)
    M_orb = None
    if both_ways:
        def rep_pairs(a, b):
            return all_pairs(a, b) and (comps[a].shift == 0 or comps[b].shift == 0)

        rep_found = _find(poly, comps, rep_pairs, cache, tol)
        M_orb = sum(c.multiplicity for c in _cluster(_expand(rep_found), ctol) if c.n >= 2)
    return CoincidenceReport(
        clusters,
        M,
        diameters.delta_plus,
        M_orb,
        low_confidence=sum(c.low_confidence for c in clusters),
    )
