"""Diameters of a polygon: critical chords of the boundary distance function."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Point, Polygon, boundary_point, cross, dot, dist, sub

ANGLE_TOL = 1e-9


class AmbiguousTangency(ValueError):
    """A boundary branch at a vertex endpoint is perpendicular to the chord."""


class TieBreakFailure(ValueError):
    """Both branches at an endpoint have the same left/right position."""


@dataclass(frozen=True)
class Endpoint:
    s: float
    point: Point
    vertex: int | None  # polygon vertex index, or None for an edge-interior point
    edge: int  # containing edge (for a vertex: the edge starting there)

    @property
    def kind(self) -> str:
        return "Vertex" if self.vertex is not None else "EdgeInterior"


@dataclass(frozen=True)
class Chord:
    a: Endpoint
    b: Endpoint
    family: bool = False  # representative of a parallel-edge continuum

    @property
    def length(self) -> float:
        return dist(self.a.point, self.b.point)


@dataclass(frozen=True)
class Diameter:
    q1: Endpoint
    q2: Endpoint
    orientation: int | None  # +1 positive, -1 negative, None undecidable
    extremum: str  # Min | Max | Saddle | Flat
    stable: bool
    tricky: bool
    length: float
    exterior: bool = False

    @property
    def positive(self) -> bool:
        return self.orientation == 1

    def endpoints(self) -> tuple[Point, Point]:
        return self.q1.point, self.q2.point

    def to_json(self) -> dict:
        return {
            "q1": list(self.q1.point),
            "q2": list(self.q2.point),
            "s1": self.q1.s,
            "s2": self.q2.s,
            "kinds": [self.q1.kind, self.q2.kind],
            "orientation": {1: "Positive", -1: "Negative", None: "Undecided"}[self.orientation],
            "extremum": self.extremum,
            "stable": self.stable,
            "tricky": self.tricky,
            "exterior": self.exterior,
            "length": self.length,
        }


def vertex_endpoint(poly: Polygon, i: int) -> Endpoint:
    i %= poly.n
    return Endpoint(poly.cum[i], poly.vertices[i], i, i)


def edge_endpoint(poly: Polygon, e: int, t: float) -> Endpoint:
    s = poly.cum[e] + t
    return Endpoint(s, boundary_point(poly, s), None, e)


def branches(poly: Polygon, ep: Endpoint) -> tuple[Point, Point]:
    """(forward, backward) unit boundary directions leaving the endpoint."""
    if ep.vertex is None:
        u = poly.directions[ep.edge]
        return u, Point(-u.x, -u.y)
    u_next = poly.directions[ep.vertex]
    u_prev = poly.directions[ep.vertex - 1]
    return u_next, Point(-u_prev.x, -u_prev.y)


def _toward(p: Point, q: Point) -> Point:
    d = sub(q, p)
    n = math.hypot(*d)
    return Point(d.x / n, d.y / n)


def _components(poly, ep, other, tol):
    d = _toward(ep.point, other.point)
    f, b = branches(poly, ep)
    return dot(f, d), dot(b, d)


def is_diameter(poly: Polygon, chord: Chord, tol: float = ANGLE_TOL) -> bool:
    """Non-separation test at both endpoints."""
    for ep, other in ((chord.a, chord.b), (chord.b, chord.a)):
        cf, cb = _components(poly, ep, other, tol)
        if ep.vertex is None:
            if abs(cf) > tol:
                return False
            continue
        if abs(cf) <= tol or abs(cb) <= tol:
            raise AmbiguousTangency(f"branch at vertex {ep.vertex} perpendicular to chord")
        if (cf > 0) != (cb > 0):
            return False
    return True


def _ordered(chord: Chord) -> tuple[Endpoint, Endpoint]:
    return (chord.a, chord.b) if chord.a.s <= chord.b.s else (chord.b, chord.a)


def orientation_sign(poly: Polygon, chord: Chord, tol: float = ANGLE_TOL) -> int:
    """+1 if the counterclockwise arc q1->q2 lies on the same side at both ends."""
    q1, q2 = _ordered(chord)
    d = _toward(q1.point, q2.point)
    lefts = []
    for ep, p1_forward in ((q1, True), (q2, False)):
        f, b = branches(poly, ep)
        p1, p2 = (f, b) if p1_forward else (b, f)
        x1, x2 = cross(p1, d), cross(p2, d)
        if abs(x1 - x2) <= tol:
            raise TieBreakFailure(f"parallel branches at s={ep.s:.6g}")
        lefts.append(x1 < x2)
    return 1 if lefts[0] == lefts[1] else -1


def _endpoint_type(poly, ep, other, tol) -> str:
    if ep.vertex is None:
        return "flat"
    cf, cb = _components(poly, ep, other, tol)
    if cf > tol and cb > tol:
        return "max"
    if cf < -tol and cb < -tol:
        return "min"
    return "mixed"


def classify_extremum(poly: Polygon, chord: Chord, tol: float = ANGLE_TOL) -> str:
    ta = _endpoint_type(poly, chord.a, chord.b, tol)
    tb = _endpoint_type(poly, chord.b, chord.a, tol)
    types = {ta, tb}
    if "flat" in types:
        rest = types - {"flat"}
        if rest == {"min"}:
            return "Min"
        return "Flat"
    if types == {"max"}:
        return "Max"
    if types == {"min"}:
        return "Min"
    return "Saddle"


def _perpendicular_incident(poly, ep, other, tol) -> bool:
    if ep.vertex is None:
        return False
    d = _toward(ep.point, other.point)
    f, b = branches(poly, ep)
    return abs(dot(f, d)) <= tol or abs(dot(b, d)) <= tol


def is_tricky(poly: Polygon, chord: Chord, tol: float = ANGLE_TOL) -> bool:
    if chord.a.vertex is None or chord.b.vertex is None:
        return False
    return _perpendicular_incident(poly, chord.a, chord.b, tol) or _perpendicular_incident(poly, chord.b, chord.a, tol)


def is_stable(poly: Polygon, chord: Chord, tol: float = ANGLE_TOL) -> bool:
    if chord.a.vertex is None and chord.b.vertex is None:
        return False
    return not (_perpendicular_incident(poly, chord.a, chord.b, tol) or _perpendicular_incident(poly, chord.b, chord.a, tol))


def _crosses_exterior(poly: Polygon, chord: Chord) -> bool:
    """True if the open chord leaves the polygon (midpoints of its pieces tested)."""
    p, q = chord.a.point, chord.b.point
    cuts = [0.0, 1.0]
    d = sub(q, p)
    for i in range(poly.n):
        a, u, ln = poly.edge(i)
        den = cross(d, u)
        if abs(den) < 1e-15:
            continue
        w = sub(a, p)
        lam = cross(w, u) / den
        mu = cross(w, d) / den
        if 0.0 < lam < 1.0 and -1e-12 <= mu <= ln + 1e-12:
            cuts.append(lam)
    cuts.sort()
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo < 1e-12:
            continue
        m = (lo + hi) / 2
        pt = Point(p.x + m * d.x, p.y + m * d.y)
        if not _inside_or_on(poly, pt):
            return True
    return False


def _inside_or_on(poly: Polygon, pt: Point) -> bool:
    inside = False
    vs = poly.vertices
    n = len(vs)
    for i in range(n):
        a, b = vs[i], vs[(i + 1) % n]
        if abs(cross(sub(b, a), sub(pt, a))) <= 1e-12 * poly.perimeter ** 2 and min(a.x, b.x) - 1e-12 <= pt.x <= max(a.x, b.x) + 1e-12 and min(a.y, b.y) - 1e-12 <= pt.y <= max(a.y, b.y) + 1e-12:
            return True
        if (a.y > pt.y) != (b.y > pt.y):
            x = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if pt.x < x:
                inside = not inside
    return inside


def enumerate_candidates(poly: Polygon, tol: float = ANGLE_TOL) -> list[Chord]:
    """Vertex pairs, vertex-to-edge perpendicular feet, and parallel-edge families."""
    n = poly.n
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            out.append(Chord(vertex_endpoint(poly, i), vertex_endpoint(poly, j)))
    ltol = 1e-9 * poly.perimeter
    for i in range(n):
        v = poly.vertices[i]
        for e in range(n):
            if e == i or e == (i - 1) % n:
                continue
            a, u, ln = poly.edge(e)
            t = dot(sub(v, a), u)
            if ltol < t < ln - ltol:
                out.append(Chord(vertex_endpoint(poly, i), edge_endpoint(poly, e, t)))
    for e in range(n):
        for f in range(e + 1, n):
            ue, uf = poly.directions[e], poly.directions[f]
            if abs(cross(ue, uf)) > tol:
                continue
            a, u, ln = poly.edge(e)
            b, _, lf = poly.edge(f)
            # projections of f onto e's line
            p0 = dot(sub(b, a), u)
            p1 = dot(sub(poly.vertices[(f + 1) % n], a), u)
            lo, hi = max(0.0, min(p0, p1)), min(ln, max(p0, p1))
            if hi - lo <= ltol:
                continue
            m = 0.5 * (lo + hi)
            tf = dot(sub(Point(a.x + m * u.x, a.y + m * u.y), b), uf)
            out.append(Chord(edge_endpoint(poly, e, m), edge_endpoint(poly, f, tf), family=True))
    return out


@dataclass
class DiameterReport:
    diameters: list[Diameter] = field(default_factory=list)  # strict diameters
    borderline: list[Diameter] = field(default_factory=list)  # perpendicular incident edge (tricky or unstable)
    families: list[Chord] = field(default_factory=list)  # parallel-edge continua
    ties: list[Chord] = field(default_factory=list)

    @property
    def positive(self) -> list[Diameter]:
        return [d for d in self.diameters if d.positive]

    @property
    def delta_plus(self) -> int:
        return len(self.positive)

    @property
    def tricky(self) -> list[Diameter]:
        return [d for d in self.diameters + self.borderline if d.tricky]

    @property
    def generic(self) -> bool:
        return not (self.borderline or self.families or self.ties)


def _make(poly, chord, tol, orientation=None) -> Diameter:
    q1, q2 = _ordered(chord)
    return Diameter(
        q1, q2, orientation,
        classify_extremum(poly, chord, tol),
        is_stable(poly, chord, tol),
        is_tricky(poly, chord, tol),
        chord.length,
        _crosses_exterior(poly, chord),
    )


def _borderline_ok(poly, chord, tol) -> bool:
    """Diameter test treating perpendicular branches as neutral."""
    for ep, other in ((chord.a, chord.b), (chord.b, chord.a)):
        cf, cb = _components(poly, ep, other, tol)
        signs = {c > 0 for c in (cf, cb) if abs(c) > tol}
        if ep.vertex is None and abs(cf) > tol:
            return False
        if len(signs) > 1:
            return False
    return True


def find_diameters(poly: Polygon, tol: float = ANGLE_TOL) -> DiameterReport:
    rep = DiameterReport()
    for chord in enumerate_candidates(poly, tol):
        if chord.family:
            rep.families.append(chord)
            continue
        try:
            if not is_diameter(poly, chord, tol):
                continue
        except AmbiguousTangency:
            if _borderline_ok(poly, chord, tol):
                try:
                    o = orientation_sign(poly, chord, tol)
                except TieBreakFailure:
                    o = None
                rep.borderline.append(_make(poly, chord, tol, o))
            continue
        try:
            o = orientation_sign(poly, chord, tol)
        except TieBreakFailure:
            rep.ties.append(chord)
            continue
        rep.diameters.append(_make(poly, chord, tol, o))
    key = lambda d: (round(d.length, 12), d.q1.s, d.q2.s)
    rep.diameters.sort(key=key)
    rep.borderline.sort(key=key)
    return rep


def positive_diameters(poly: Polygon, tol: float = ANGLE_TOL) -> list[Diameter]:
    return find_diameters(poly, tol).positive


def delta_plus(poly: Polygon, tol: float = ANGLE_TOL) -> int:
    return find_diameters(poly, tol).delta_plus
