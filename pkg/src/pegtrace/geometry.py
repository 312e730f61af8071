"""Planar primitives: polygons, boundary parametrization, signed areas, labeled rectangles."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence


class PolygonError(ValueError):
    """Base class for polygon validation failures."""


class TooFewVertices(PolygonError):
    pass


class ZeroLengthEdge(PolygonError):
    pass


class CollinearRun(PolygonError):
    pass


class SelfIntersecting(PolygonError):
    pass


class NotOnBoundary(ValueError):
    pass


class Point(NamedTuple):
    x: float
    y: float


def cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b) -> float:
    return a[0] * b[0] + a[1] * b[1]


def sub(a, b) -> Point:
    return Point(a[0] - b[0], a[1] - b[1])


def dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def signed_area(chain: Iterable[Sequence[float]]) -> float:
    """Shoelace area of a closed chain (last point joins the first); CCW positive."""
    pts = list(chain)
    n = len(pts)
    if n < 3:
        return 0.0
    # shift to the first point to limit cancellation
    x0, y0 = pts[0]
    s = 0.0
    for i in range(1, n - 1):
        ax, ay = pts[i][0] - x0, pts[i][1] - y0
        bx, by = pts[i + 1][0] - x0, pts[i + 1][1] - y0
        s += ax * by - ay * bx
    return 0.5 * s


def _segments_intersect(p, q, r, s, tol) -> bool:
    d1 = cross(sub(q, p), sub(r, p))
    d2 = cross(sub(q, p), sub(s, p))
    d3 = cross(sub(s, r), sub(p, r))
    d4 = cross(sub(s, r), sub(q, r))
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    def on_seg(a, b, c):
        # c collinear with ab and within its bounding box
        return (
            abs(cross(sub(b, a), sub(c, a))) <= tol
            and min(a[0], b[0]) - tol <= c[0] <= max(a[0], b[0]) + tol
            and min(a[1], b[1]) - tol <= c[1] <= max(a[1], b[1]) + tol
        )

    return on_seg(p, q, r) or on_seg(p, q, s) or on_seg(r, s, p) or on_seg(r, s, q)


@dataclass(frozen=True)
class Polygon:
    """Simple polygon stored counterclockwise, with an arclength edge table.

    Edge ``i`` runs from ``vertices[i]`` to ``vertices[i+1]``; its boundary
    parameter starts at ``cum[i]``.
    """

    vertices: tuple[Point, ...]
    lengths: tuple[float, ...] = field(repr=False)
    directions: tuple[Point, ...] = field(repr=False)
    cum: tuple[float, ...] = field(repr=False)
    perimeter: float = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def eps_geo(self) -> float:
        return 1e-9 * self.perimeter

    def edge(self, i: int) -> tuple[Point, Point, float]:
        """(anchor, unit direction, length) of edge ``i`` (index taken mod n)."""
        i %= self.n
        return self.vertices[i], self.directions[i], self.lengths[i]

    def edge_of(self, s: float) -> int:
        s = s % self.perimeter
        i = bisect.bisect_right(self.cum, s) - 1
        return min(max(i, 0), self.n - 1)

    def to_json(self) -> dict:
        return {"vertices": [[v.x, v.y] for v in self.vertices]}

    def transformed(self, fn) -> "Polygon":
        return validate_polygon([fn(v) for v in self.vertices])


def _build(vertices: Sequence[Point]) -> Polygon:
    n = len(vertices)
    lengths, dirs, cum = [], [], []
    total = 0.0
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        ln = dist(a, b)
        lengths.append(ln)
        dirs.append(Point((b[0] - a[0]) / ln, (b[1] - a[1]) / ln) if ln > 0 else Point(0.0, 0.0))
        cum.append(total)
        total += ln
    return Polygon(tuple(vertices), tuple(lengths), tuple(dirs), tuple(cum), total)


def validate_polygon(raw: Iterable[Sequence[float]], rel_tol: float = 1e-9) -> Polygon:
    """Validate a vertex list and return the counterclockwise Polygon."""
    pts = [Point(float(p[0]), float(p[1])) for p in raw]
    if len(pts) < 3:
        raise TooFewVertices(f"need at least 3 vertices, got {len(pts)}")
    for i, p in enumerate(pts):
        if not (math.isfinite(p.x) and math.isfinite(p.y)):
            raise PolygonError(f"vertex {i} is not finite: {p}")
    poly = _build(pts)
    tol = rel_tol * poly.perimeter
    n = poly.n
    for i, ln in enumerate(poly.lengths):
        if ln <= tol:
            raise ZeroLengthEdge(f"edge {i} has zero length")
    for i in range(n):
        if abs(cross(poly.directions[i - 1], poly.directions[i])) <= rel_tol:
            raise CollinearRun(f"vertices {(i - 1) % n}, {i}, {(i + 1) % n} are collinear")
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n], tol * tol):
                raise SelfIntersecting(f"edges {i} and {j} intersect")
    if poly.area < 0:
        pts = [pts[0]] + pts[:0:-1]
        poly = _build(pts)
    return poly


def boundary_point(poly: Polygon, s: float) -> Point:
    s = s % poly.perimeter
    i = poly.edge_of(s)
    a, u, _ = poly.edge(i)
    t = s - poly.cum[i]
    return Point(a[0] + t * u[0], a[1] + t * u[1])


def boundary_param(poly: Polygon, q: Sequence[float], tol: float | None = None) -> float:
    """Inverse of :func:`boundary_point`; raises NotOnBoundary if ``q`` is off the boundary."""
    if tol is None:
        tol = 1e-9 * poly.perimeter
    best, best_s = math.inf, 0.0
    for i in range(poly.n):
        a, u, ln = poly.edge(i)
        t = min(max(dot(sub(q, a), u), 0.0), ln)
        d = math.hypot(q[0] - a[0] - t * u[0], q[1] - a[1] - t * u[1])
        if d < best:
            best, best_s = d, poly.cum[i] + t
    if best > tol:
        raise NotOnBoundary(f"point {tuple(q)} is {best:.3g} from the boundary")
    return best_s % poly.perimeter


def distance_to_boundary(poly: Polygon, q: Sequence[float]) -> float:
    best = math.inf
    for i in range(poly.n):
        a, u, ln = poly.edge(i)
        t = min(max(dot(sub(q, a), u), 0.0), ln)
        best = min(best, math.hypot(q[0] - a[0] - t * u[0], q[1] - a[1] - t * u[1]))
    return best


def forward_gaps(params: Sequence[float], period: float, tol: float = 0.0) -> list[float]:
    """Counterclockwise gaps between consecutive parameters, in [0, period)."""
    k = len(params)
    gaps = []
    for j in range(k):
        g = (params[(j + 1) % k] - params[j]) % period
        if g > period - tol:
            g = 0.0
        gaps.append(g)
    return gaps


def cyclic_order_ok(
    params: Sequence[float], period: float = 1.0, directed: bool = False, tol: float | None = None
) -> bool:
    """True iff the parameters go once around the circle in order.

    With ``directed`` only the increasing (counterclockwise) sense is accepted.
    Equal parameters count as ordered.
    """
    if tol is None:
        tol = 1e-12 * period
    fwd = sum(forward_gaps(params, period, tol))
    if abs(fwd - period) <= 4 * tol or fwd <= 4 * tol:
        return True
    if directed:
        return False
    back = sum(forward_gaps(list(params)[::-1], period, tol))
    return abs(back - period) <= 4 * tol


@dataclass(frozen=True)
class LabeledRectangle:
    vertices: tuple[Point, Point, Point, Point]

    @classmethod
    def from_points(cls, pts) -> "LabeledRectangle":
        return cls(tuple(Point(float(p[0]), float(p[1])) for p in pts))

    @property
    def X(self) -> float:
        return dist(self.vertices[0], self.vertices[1])

    @property
    def Y(self) -> float:
        return dist(self.vertices[1], self.vertices[2])

    @property
    def orientation(self) -> int:
        """+1 if the labels run counterclockwise, -1 if clockwise, 0 if degenerate."""
        r1, r2, r3, _ = self.vertices
        c = cross(sub(r2, r1), sub(r3, r2))
        return (c > 0) - (c < 0)

    def is_degenerate(self, tol: float) -> bool:
        return self.X <= tol or self.Y <= tol

    def shift(self, k: int = 1) -> "LabeledRectangle":
        """Relabel R_j -> R_{j+k}; a shift by one swaps X and Y."""
        k %= 4
        v = self.vertices
        return LabeledRectangle(v[k:] + v[:k])

    def reversed(self) -> "LabeledRectangle":
        v = self.vertices
        return LabeledRectangle((v[0], v[3], v[2], v[1]))

    def residuals(self) -> tuple[float, float]:
        """(parallelogram closure, orthogonality) residuals."""
        r1, r2, r3, r4 = self.vertices
        closure = math.hypot(r1.x + r3.x - r2.x - r4.x, r1.y + r3.y - r2.y - r4.y)
        ortho = abs(dot(sub(r1, r2), sub(r3, r2)))
        return closure, ortho

    def check(self, tol: float = 1e-9) -> bool:
        c, o = self.residuals()
        scale = self.X + self.Y + 1.0
        return c <= tol * scale and o <= tol * scale * scale

    def as_row(self) -> list[float]:
        return [c for v in self.vertices for c in v] + [self.X, self.Y]


def rect_distance(a: LabeledRectangle, b: LabeledRectangle) -> float:
    """Max-vertex distance between labeled rectangles."""
    return max(dist(p, q) for p, q in zip(a.vertices, b.vertices))


def rect_step(a: LabeledRectangle, b: LabeledRectangle) -> float:
    """Euclidean distance in the 8 vertex coordinates; the smooth metric used for arc length."""
    return math.sqrt(sum((p.x - q.x) ** 2 + (p.y - q.y) ** 2 for p, q in zip(a.vertices, b.vertices)))
