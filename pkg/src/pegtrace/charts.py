"""Algebraic charts: rectangles inscribed in four segments.

For a quadruple of segments ``E = (E1, E2, E3, E4)`` with ``R_j = a_j + t_j u_j``
the rectangles inscribed in the supporting lines form the intersection of a
plane (``R4 = R1 - R2 + R3`` lies on ``L4``) with a quadric (right angle at
``R2``) in ``(t1, t2, t3)`` space, i.e. a conic.  The box ``0 <= t_j <= l_j``
cuts out the part lying on the actual segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .geometry import LabeledRectangle, Point, Polygon, cross, dot

REL_EPS = 1e-9


class ChartError(ValueError):
    pass


class AllParallelToL4(ChartError):
    """No parameter can be eliminated: every segment is parallel to L4."""

    def __init__(self, msg: str, two_dimensional: bool):
        super().__init__(msg)
        self.two_dimensional = two_dimensional


class DegenerateChart(ChartError):
    pass


class OffHyperplane(ChartError):
    pass


class SingularPoint(ChartError):
    pass


class ConicKind(str, Enum):
    ELLIPSE = "Ellipse"
    HYPERBOLA = "Hyperbola"
    PARABOLA = "Parabola"
    CROSSING_LINES = "CrossingLines"
    PARALLEL_LINES = "ParallelLines"
    SINGLE_LINE = "SingleLine"
    DOUBLE_LINE = "DoubleLine"
    EMPTY = "Empty"
    DEGENERATE_PLANE = "DegeneratePlane"


LINE_KINDS = {
    ConicKind.CROSSING_LINES,
    ConicKind.PARALLEL_LINES,
    ConicKind.SINGLE_LINE,
    ConicKind.DOUBLE_LINE,
}


@dataclass(frozen=True)
class EdgeQuadruple:
    indices: tuple[int, int, int, int] | None
    anchors: tuple[Point, Point, Point, Point]
    directions: tuple[Point, Point, Point, Point]
    lengths: tuple[float, float, float, float]

    @classmethod
    def from_polygon(cls, poly: Polygon, indices: Sequence[int]) -> "EdgeQuadruple":
        idx = tuple(int(i) % poly.n for i in indices)
        edges = [poly.edge(i) for i in idx]
        return cls(idx, *(tuple(e[k] for e in edges) for k in range(3)))

    @classmethod
    def from_segments(cls, segments) -> "EdgeQuadruple":
        """Build from four ``(anchor, direction, length)`` triples; directions are normalised."""
        anchors, dirs, lens = [], [], []
        for a, u, ln in segments:
            norm = math.hypot(u[0], u[1])
            anchors.append(Point(float(a[0]), float(a[1])))
            dirs.append(Point(u[0] / norm, u[1] / norm))
            lens.append(float(ln))
        if min(lens) <= 0:
            raise ChartError("segments must have positive length")
        return cls(None, tuple(anchors), tuple(dirs), tuple(lens))

    def replace(self, poly: Polygon, slot: int, edge: int) -> "EdgeQuadruple":
        idx = list(self.indices)
        idx[slot] = edge
        return EdgeQuadruple.from_polygon(poly, idx)

    def shifted(self, poly: Polygon, k: int) -> "EdgeQuadruple":
        k %= 4
        idx = self.indices
        return EdgeQuadruple.from_polygon(poly, idx[k:] + idx[:k])


def _add3(a, b, s=1.0):
    return (a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2])


def _dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross3(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _norm3(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def _unit3(a):
    n = _norm3(a)
    return (a[0] / n, a[1] / n, a[2] / n)


@dataclass
class Branch:
    """A straight component of a degenerate conic: ``point + mu * direction``."""

    point: tuple[float, float, float]
    direction: tuple[float, float, float]


@dataclass
class Chart:
    quad: EdgeQuadruple
    c: tuple[float, float, float, float]
    quadratic: np.ndarray  # 4x4 homogeneous form of Q in (t1, t2, t3, 1)
    eliminated: int
    reduced: np.ndarray  # 3x3 homogeneous conic in the two free parameters
    kind: ConicKind
    branches: list[Branch] = field(default_factory=list)
    node: tuple[float, float, float] | None = None
    # t4 = t4c[0] + t4c[1] t1 + t4c[2] t2 + t4c[3] t3
    t4c: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    scale: float = 1.0
    _G: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        M = self.quadratic
        self._A = tuple(tuple(float(M[i, j]) for j in range(3)) for i in range(3))
        self._l = tuple(float(2 * M[i, 3]) for i in range(3))
        self._q0 = float(M[3, 3])
        self._n = (self.c[1], self.c[2], self.c[3])
        self._nn = _dot3(self._n, self._n)

    # --- tolerances -------------------------------------------------------
    @property
    def eps_alg(self) -> float:
        return REL_EPS * self.scale * self.scale

    @property
    def lengths(self):
        return self.quad.lengths

    # --- evaluation -------------------------------------------------------
    def pi(self, t) -> float:
        c = self.c
        return c[0] + c[1] * t[0] + c[2] * t[1] + c[3] * t[2]

    def q(self, t) -> float:
        A, l = self._A, self._l
        t1, t2, t3 = t
        return (
            A[0][0] * t1 * t1 + A[1][1] * t2 * t2 + A[2][2] * t3 * t3
            + 2 * (A[0][1] * t1 * t2 + A[0][2] * t1 * t3 + A[1][2] * t2 * t3)
            + l[0] * t1 + l[1] * t2 + l[2] * t3 + self._q0
        )

    def grad_q(self, t):
        A, l = self._A, self._l
        return tuple(2 * (A[i][0] * t[0] + A[i][1] * t[1] + A[i][2] * t[2]) + l[i] for i in range(3))

    def quad_form(self, d) -> float:
        A = self._A
        return sum(A[i][j] * d[i] * d[j] for i in range(3) for j in range(3))

    def t4(self, t) -> float:
        k = self.t4c
        return k[0] + k[1] * t[0] + k[2] * t[1] + k[3] * t[2]

    def dt4(self, d) -> float:
        k = self.t4c
        return k[1] * d[0] + k[2] * d[1] + k[3] * d[2]

    def params4(self, t) -> tuple[float, float, float, float]:
        return (t[0], t[1], t[2], self.t4(t))

    def project_to_plane(self, t):
        r = self.pi(t) / self._nn
        return (t[0] - r * self._n[0], t[1] - r * self._n[1], t[2] - r * self._n[2])

    def rectangle(self, t) -> LabeledRectangle:
        q = self.quad
        a, u = q.anchors, q.directions
        r1 = Point(a[0].x + t[0] * u[0].x, a[0].y + t[0] * u[0].y)
        r2 = Point(a[1].x + t[1] * u[1].x, a[1].y + t[1] * u[1].y)
        r3 = Point(a[2].x + t[2] * u[2].x, a[2].y + t[2] * u[2].y)
        r4 = Point(r1.x - r2.x + r3.x, r1.y - r2.y + r3.y)
        return LabeledRectangle((r1, r2, r3, r4))

    def params_of(self, rect: LabeledRectangle):
        """Chart parameters (t1, t2, t3) of a rectangle whose vertices lie on the lines."""
        q = self.quad
        return tuple(dot((rect.vertices[j][0] - q.anchors[j][0], rect.vertices[j][1] - q.anchors[j][1]), q.directions[j]) for j in range(3))

    def in_box(self, t, tol: float = 0.0) -> bool:
        p = self.params4(t)
        return all(-tol <= p[j] <= self.lengths[j] + tol for j in range(4))

    # --- differential structure ------------------------------------------
    def projected_gradient(self, t):
        g = self.grad_q(t)
        r = _dot3(g, self._n) / self._nn
        return (g[0] - r * self._n[0], g[1] - r * self._n[1], g[2] - r * self._n[2])

    def tangent_at(self, t, prefer=None):
        """Unit tangent of the solution curve at ``t``; sign aligned with ``prefer`` if given."""
        if self.kind in LINE_KINDS:
            br = self.branch_at(t)
            if br is None:
                raise SingularPoint(f"point {t} lies on more than one branch")
            d = br.direction
        else:
            gp = self.projected_gradient(t)
            if _norm3(gp) <= REL_EPS * self.scale:
                raise SingularPoint(f"projected gradient vanishes at {t}")
            d = _unit3(_cross3(self._n, gp))
        if prefer is not None and _dot3(d, prefer) < 0:
            d = (-d[0], -d[1], -d[2])
        return d

    def branch_at(self, t, tol: float | None = None):
        """The unique line branch through ``t`` (None at a node or if off every branch)."""
        if tol is None:
            tol = 1e-7 * self.scale
        hits = [b for b in self.branches if _line_distance(b, t) <= tol]
        if len(hits) == 1:
            return hits[0]
        return None

    def branches_through(self, t, tol: float | None = None) -> list[Branch]:
        if tol is None:
            tol = 1e-7 * self.scale
        return [b for b in self.branches if _line_distance(b, t) <= tol]

    def rect_speed(self, d) -> float:
        """Max-vertex displacement rate for a move along ``d`` in (t1, t2, t3)."""
        return max(abs(d[0]), abs(d[1]), abs(d[2]), abs(self.dt4(d)))

    def correct(self, p):
        """Project ``p`` back onto the conic along the in-plane gradient.

        Returns the corrected point and the correction length, or None when the
        gradient line misses the conic.
        """
        p = self.project_to_plane(p)
        g = self.projected_gradient(p)
        gg = _dot3(g, g)
        if gg == 0.0:
            return None
        a = self.quad_form(g)
        b = _dot3(self.grad_q(p), g)
        c = self.q(p)
        lam = _small_root(a, b, c)
        if lam is None:
            return None
        out = (p[0] + lam * g[0], p[1] + lam * g[1], p[2] + lam * g[2])
        return out, abs(lam) * math.sqrt(gg)

    def hyperplane_hits(self, w, b):
        """Points of the conic with ``w . t = b`` (a line in the plane Pi meets the quadric).

        Returns a list of points, or None when the whole line lies on the conic.
        """
        d = _cross3(self._n, w)
        dd = _dot3(d, d)
        if dd <= 1e-24 * _dot3(w, w) * self._nn:
            return []
        # point on both planes: combination of normals
        n, nn, wn, ww = self._n, self._nn, _dot3(self._n, w), _dot3(w, w)
        rhs1, rhs2 = -self.c[0], b
        det = nn * ww - wn * wn
        alpha = (rhs1 * ww - rhs2 * wn) / det
        beta = (rhs2 * nn - rhs1 * wn) / det
        p0 = (alpha * n[0] + beta * w[0], alpha * n[1] + beta * w[1], alpha * n[2] + beta * w[2])
        d = _unit3(d)
        qa = self.quad_form(d)
        qb = _dot3(self.grad_q(p0), d)
        qc = self.q(p0)
        roots = _roots2(qa, qb, qc, self.eps_alg, self.scale)
        if roots is None:
            return None
        return [_add3(p0, d, r) for r in roots]

    def wall(self, slot: int, side: int):
        """Hyperplane ``(w, b)`` for ``t_slot == 0`` (side 0) or ``t_slot == l`` (side 1)."""
        val = 0.0 if side == 0 else self.lengths[slot]
        if slot < 3:
            w = [0.0, 0.0, 0.0]
            w[slot] = 1.0
            return tuple(w), val
        k = self.t4c
        return (k[1], k[2], k[3]), val - k[0]


def _line_distance(br: Branch, t) -> float:
    v = (t[0] - br.point[0], t[1] - br.point[1], t[2] - br.point[2])
    s = _dot3(v, br.direction)
    return _norm3(_add3(v, br.direction, -s))


def _small_root(a, b, c):
    """Root of a x^2 + b x + c nearest zero (None if complex)."""
    if a == 0.0 or abs(a * c) < 1e-14 * b * b:
        if b == 0.0:
            return None
        # one Newton-polished linear root
        x = -c / b
        if a != 0.0:
            x = -c / (b + a * x)
        return x
    disc = b * b - 4 * a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    qq = -0.5 * (b + math.copysign(sq, b))
    r1 = qq / a
    r2 = c / qq if qq != 0 else r1
    return r1 if abs(r1) < abs(r2) else r2


def _roots2(a, b, c, eps, scale):
    """Real roots of a x^2 + b x + c; None if the polynomial vanishes identically."""
    if abs(a) <= REL_EPS and abs(b) <= REL_EPS * scale and abs(c) <= eps:
        return None
    if abs(a) <= REL_EPS * 1e-3:
        if abs(b) <= 1e-15 * scale:
            return []
        return [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        if disc > -1e-12 * b * b:
            return [-b / (2 * a)]
        return []
    sq = math.sqrt(disc)
    qq = -0.5 * (b + math.copysign(sq, b))
    roots = [qq / a]
    if qq != 0:
        roots.append(c / qq)
    return roots


def _quadratic_matrix(quad: EdgeQuadruple) -> np.ndarray:
    a, u = quad.anchors, quad.directions
    b1 = (a[0].x - a[1].x, a[0].y - a[1].y)
    b3 = (a[2].x - a[1].x, a[2].y - a[1].y)
    A = np.zeros((3, 3))
    A[1, 1] = dot(u[1], u[1])
    A[0, 2] = A[2, 0] = 0.5 * dot(u[0], u[2])
    A[0, 1] = A[1, 0] = -0.5 * dot(u[0], u[1])
    A[1, 2] = A[2, 1] = -0.5 * dot(u[1], u[2])
    lin = np.array([dot(u[0], b3), -dot(u[1], b3) - dot(u[1], b1), dot(u[2], b1)])
    M = np.zeros((4, 4))
    M[:3, :3] = A
    M[:3, 3] = M[3, :3] = 0.5 * lin
    M[3, 3] = dot(b1, b3)
    return M


def _classify(C: np.ndarray, scale: float):
    """Classify the reduced conic; returns (kind, lines) with lines in the free coordinates."""
    D = np.diag([scale, scale, 1.0])
    Cn = D @ C @ D / (scale * scale)
    norm = np.max(np.abs(Cn))
    eps = REL_EPS
    if norm <= eps:
        return ConicKind.DEGENERATE_PLANE, []
    Cn = Cn / norm
    Aq = Cn[:2, :2]
    lin = Cn[:2, 2]
    f = Cn[2, 2]
    delta = Aq[0, 0] * Aq[1, 1] - Aq[0, 1] ** 2
    det3 = np.linalg.det(Cn)
    qnorm = np.max(np.abs(Aq))

    def to_s(p, d):
        # back from normalised coordinates (sigma = s / scale)
        return np.array(p) * scale, np.array(d)

    if qnorm <= eps:
        if np.max(np.abs(lin)) <= eps:
            return ConicKind.EMPTY, []
        # 2 lin . s + f = 0
        d = np.array([-lin[1], lin[0]])
        p = -f * lin / (2 * lin @ lin)
        return ConicKind.SINGLE_LINE, [to_s(p, d / np.linalg.norm(d))]
    if abs(det3) > eps:
        if delta > eps:
            if det3 * (Aq[0, 0] + Aq[1, 1]) < 0:
                return ConicKind.ELLIPSE, []
            return ConicKind.EMPTY, []
        if delta < -eps:
            return ConicKind.HYPERBOLA, []
        return ConicKind.PARABOLA, []
    if delta < -eps:
        node = np.linalg.solve(Aq, -lin)
        a, b, c = Aq[0, 0], Aq[0, 1], Aq[1, 1]
        sq = math.sqrt(-delta)
        if max(abs(a), abs(c)) <= eps:
            # q = 2 b s1 s2: the lines are the coordinate axes through the node
            dirs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        elif abs(a) >= abs(c):
            dirs = [np.array([-b + sq, a]), np.array([-b - sq, a])]
        else:
            dirs = [np.array([c, -b + sq]), np.array([c, -b - sq])]
        return ConicKind.CROSSING_LINES, [to_s(node, d / np.linalg.norm(d)) for d in dirs]
    if delta > eps:
        return ConicKind.EMPTY, []
    # rank-one quadratic part: parallel, double or no lines
    w, V = np.linalg.eigh(Aq)
    i = int(np.argmax(np.abs(w)))
    lam, v = w[i], V[:, i]
    d = np.array([-v[1], v[0]])
    p_lin = lin @ v
    disc = p_lin * p_lin - lam * f
    if disc < -eps:
        return ConicKind.EMPTY, []
    if disc <= eps:
        alpha = -p_lin / lam
        return ConicKind.DOUBLE_LINE, [to_s(alpha * v, d)]
    sq = math.sqrt(disc)
    return ConicKind.PARALLEL_LINES, [to_s(((-p_lin + s) / lam) * v, d) for s in (sq, -sq)]


def build_chart(quad: EdgeQuadruple) -> Chart:
    """Build the algebraic model of the rectangles inscribed in ``quad``."""
    a, u = quad.anchors, quad.directions
    w = Point(a[0].x - a[1].x + a[2].x - a[3].x, a[0].y - a[1].y + a[2].y - a[3].y)
    c = (cross(w, u[3]), cross(u[0], u[3]), -cross(u[1], u[3]), cross(u[2], u[3]))
    scale = 1.0 + max(quad.lengths)
    if max(abs(c[1]), abs(c[2]), abs(c[3])) <= REL_EPS:
        two_d = abs(c[0]) <= REL_EPS * scale
        raise AllParallelToL4(f"all segments of {quad.indices} are parallel to the fourth", two_d)
    k = int(np.argmax(np.abs(c[1:])))
    free = [j for j in range(3) if j != k]
    G = np.zeros((4, 3))
    G[free[0], 0] = 1.0
    G[free[1], 1] = 1.0
    G[k, 0] = -c[1 + free[0]] / c[1 + k]
    G[k, 1] = -c[1 + free[1]] / c[1 + k]
    G[k, 2] = -c[0] / c[1 + k]
    G[3, 2] = 1.0
    M = _quadratic_matrix(quad)
    C = G.T @ M @ G
    kind, lines = _classify(C, scale)
    branches = []
    for p, d in lines:
        p3 = G @ np.array([p[0], p[1], 1.0])
        d3 = G[:3, :2] @ d
        branches.append(Branch(tuple(float(x) for x in p3[:3]), _unit3(tuple(float(x) for x in d3))))
    node = branches[0].point if kind == ConicKind.CROSSING_LINES else None
    t4c = (
        dot(w, u[3]),
        dot(u[0], u[3]),
        -dot(u[1], u[3]),
        dot(u[2], u[3]),
    )
    chart = Chart(quad, c, M, k, C, kind, branches, node, t4c, scale, G)
    # re-project line data onto the plane to remove rounding drift
    for br in chart.branches:
        br.point = chart.project_to_plane(br.point)
    return chart


def point_from_params(chart: Chart, t1: float, t2: float, t3: float) -> LabeledRectangle:
    t = (t1, t2, t3)
    if abs(chart.pi(t)) > chart.eps_alg:
        raise OffHyperplane(f"parameters {t} violate the closure plane by {chart.pi(t):.3g}")
    return chart.rectangle(t)


def tangent_at(chart: Chart, t, prefer=None):
    return chart.tangent_at(t, prefer)


def _xy_squared_along(chart: Chart, br: Branch):
    """Coefficients of X^2 and Y^2 as quadratics in the line parameter."""
    r0 = chart.rectangle(br.point)
    r1 = chart.rectangle(_add3(br.point, br.direction))
    r2 = chart.rectangle(_add3(br.point, br.direction, 2.0))
    out = []
    for attr in ("X", "Y"):
        f0, f1, f2 = (getattr(r, attr) ** 2 for r in (r0, r1, r2))
        out.append((f0, f1 - f0, f2 - 2 * f1 + f0))
    return out


def detect_degenerate(chart: Chart) -> bool:
    """True if the chart carries a continuum of isometric rectangles."""
    if chart.kind == ConicKind.DEGENERATE_PLANE:
        return True
    if chart.kind not in LINE_KINDS:
        return False
    tol = REL_EPS * chart.scale * chart.scale
    for br in chart.branches:
        coeffs = _xy_squared_along(chart, br)
        if all(abs(c1) <= tol and abs(c2) <= tol for _, c1, c2 in coeffs):
            return True
    return False


def quadruple_is_degenerate(quad: EdgeQuadruple) -> bool:
    """Degeneracy test that also covers quadruples that cannot be charted."""
    try:
        chart = build_chart(quad)
    except AllParallelToL4 as exc:
        return exc.two_dimensional
    return detect_degenerate(chart)


# --- in-box components ----------------------------------------------------

def _box_values(chart: Chart, t):
    p = chart.params4(t)
    return [v for j in range(4) for v in (p[j], chart.lengths[j] - p[j])]


def _wall_points(chart: Chart, tol: float):
    pts = []
    for slot in range(4):
        for side in (0, 1):
            w, b = chart.wall(slot, side)
            hits = chart.hyperplane_hits(w, b)
            if not hits:
                continue
            for h in hits:
                if chart.in_box(h, tol) and abs(chart.q(h)) <= 1e3 * chart.eps_alg:
                    pts.append((h, slot, side))
    # merge duplicates (corners)
    out = []
    for p in pts:
        if all(_norm3(_add3(p[0], q[0], -1.0)) > 1e3 * tol for q in out):
            out.append(p)
    return out


def _inward(chart: Chart, t, d, tol) -> bool:
    """Does moving along ``d`` from ``t`` keep every active box constraint satisfied?"""
    p = chart.params4(t)
    dp = (d[0], d[1], d[2], chart.dt4(d))
    for j in range(4):
        if abs(p[j]) <= tol and dp[j] < -1e-9:
            return False
        if abs(p[j] - chart.lengths[j]) <= tol and dp[j] > 1e-9:
            return False
    return True


def chart_components(chart: Chart, grid: int = 200) -> list[list[tuple[float, float, float]]]:
    """Sample chains of the solution curve inside the box, one per connected piece.

    Each line branch of a degenerate conic is reported as its own component.
    """
    if chart.kind == ConicKind.DEGENERATE_PLANE:
        raise DegenerateChart(f"quadruple {chart.quad.indices} is degenerate")
    if chart.kind == ConicKind.EMPTY:
        return []
    lens = chart.lengths
    tol = 1e-9 * chart.scale
    h = max(lens) / grid
    comps = []
    if chart.kind in LINE_KINDS:
        for br in chart.branches:
            lo, hi = -math.inf, math.inf
            p4 = chart.params4(br.point)
            d4 = (br.direction[0], br.direction[1], br.direction[2], chart.dt4(br.direction))
            empty = False
            for j in range(4):
                if abs(d4[j]) < 1e-14:
                    if not (-tol <= p4[j] <= lens[j] + tol):
                        empty = True
                    continue
                m0, m1 = (-p4[j]) / d4[j], (lens[j] - p4[j]) / d4[j]
                lo, hi = max(lo, min(m0, m1)), min(hi, max(m0, m1))
            if empty or hi < lo - tol:
                continue
            n = max(2, int(math.ceil((hi - lo) * chart.rect_speed(br.direction) / h)) + 1)
            comps.append([_add3(br.point, br.direction, lo + (hi - lo) * i / (n - 1)) for i in range(n)])
        assert len(comps) <= 64
        return comps
    walls = _wall_points(chart, tol)
    used = [False] * len(walls)
    for i, (p, slot, side) in enumerate(walls):
        if used[i]:
            continue
        try:
            d = chart.tangent_at(p)
        except SingularPoint:
            continue
        if not _inward(chart, p, d, 1e3 * tol):
            d = (-d[0], -d[1], -d[2])
            if not _inward(chart, p, d, 1e3 * tol):
                used[i] = True
                continue
        used[i] = True
        chain, end = _march_in_box(chart, p, d, h)
        comps.append(chain)
        for j, (q, _, _) in enumerate(walls):
            if not used[j] and _norm3(_add3(q, end, -1.0)) <= 1e-6 * chart.scale:
                used[j] = True
    if not walls and chart.kind == ConicKind.ELLIPSE:
        start = _ellipse_point(chart)
        if start is not None and chart.in_box(start, tol):
            d = chart.tangent_at(start)
            chain, _ = _march_in_box(chart, start, d, h, closed_start=start)
            comps.append(chain)
    assert len(comps) <= 64, "conic-box components exceed 64"
    return comps


def _ellipse_point(chart: Chart):
    C = chart.reduced
    center = np.linalg.solve(C[:2, :2], -C[:2, 2])
    G = chart._G
    c3 = G @ np.array([center[0], center[1], 1.0])
    for idx in range(3):
        w = [0.0, 0.0, 0.0]
        w[idx] = 1.0
        hits = chart.hyperplane_hits(tuple(w), float(c3[idx]))
        if hits:
            return hits[0]
    return None


def _march_in_box(chart: Chart, p, d, h, closed_start=None, max_steps=10**6):
    chain = [p]
    t = p
    travelled = 0.0
    for _ in range(max_steps):
        step = h / chart.rect_speed(d)
        res = None
        while res is None or res[1] > 1e-3 * h:
            res = chart.correct(_add3(t, d, step))
            if res is None or res[1] > 1e-3 * h:
                step *= 0.5
                res = None
                if step < 1e-12 * chart.scale:
                    raise DegenerateChart("marching failed to converge")
        nt = res[0]
        if not chart.in_box(nt):
            exit_pt = _exit_point(chart, t, nt)
            chain.append(exit_pt)
            return chain, exit_pt
        travelled += _norm3(_add3(nt, t, -1.0))
        if closed_start is not None and travelled > 4 * h and _norm3(_add3(nt, closed_start, -1.0)) < 1.5 * step:
            chain.append(closed_start)
            return chain, closed_start
        chain.append(nt)
        d = chart.tangent_at(nt, prefer=d)
        t = nt
    raise DegenerateChart("step budget exhausted")


def _exit_point(chart: Chart, t_in, t_out):
    best, best_d = t_out, math.inf
    for slot in range(4):
        for side in (0, 1):
            w, b = chart.wall(slot, side)
            f_in, f_out = _dot3(w, t_in) - b, _dot3(w, t_out) - b
            if f_in * f_out > 0:
                continue
            frac = f_in / (f_in - f_out) if f_in != f_out else 0.0
            guess = _add3(t_in, _add3(t_out, t_in, -1.0), frac)
            hits = chart.hyperplane_hits(w, b) or [guess]
            hit = min(hits, key=lambda q: _norm3(_add3(q, guess, -1.0)))
            dd = _norm3(_add3(hit, t_in, -1.0))
            if dd < best_d:
                best, best_d = hit, dd
    return best
