"""Shape curves, the 1-form omega = -X dY + Y dX, region areas and the sweep check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .charts import LINE_KINDS, SingularPoint
from .geometry import LabeledRectangle, Polygon, boundary_param, cyclic_order_ok, signed_area
from .tracer import ArcComponent, ChartCache, Sample


class ClassMismatch(ValueError):
    pass


class NotGracing(ValueError):
    pass


@dataclass
class ShapeCurve:
    points: np.ndarray  # (m, 2) array of (X, Y)
    arclen: np.ndarray
    cls: str
    component: ArcComponent | None = None


@dataclass
class ShapeLoop:
    points: np.ndarray  # closed chain; the last point joins the first implicitly
    augmentation: str  # ViaOrigin | AlongAxis | None


@dataclass
class RegionAreas:
    A1: float
    A2: float
    A3: float
    A4: float

    @property
    def A(self) -> float:
        return (self.A1 + self.A3) - (self.A2 + self.A4)

    def as_tuple(self):
        return (self.A1, self.A2, self.A3, self.A4)


def shape_curve(comp: ArcComponent, eps: float = 0.0) -> ShapeCurve:
    pts = np.array([(s.X, s.Y) for s in comp.samples], dtype=float)
    if comp.is_arc:
        for i in (0, -1):
            k = int(np.argmin(pts[i]))
            pts[i, k] = 0.0
    else:
        pts[-1] = pts[0]
    arc = np.array([s.arclen for s in comp.samples])
    return ShapeCurve(pts, arc, comp.cls, comp)


def _on_axis(p, tol):
    """'X' if on the X axis (Y == 0), 'Y' if on the Y axis, 'O' at the origin."""
    x0, y0 = abs(p[0]) <= tol, abs(p[1]) <= tol
    if x0 and y0:
        return "O"
    if y0:
        return "X"
    if x0:
        return "Y"
    return None


def shape_loop(curve: ShapeCurve, cls: str | None = None, tol: float = 1e-9) -> ShapeLoop:
    cls = cls or curve.cls
    pts = curve.points
    if cls == "Loop":
        if np.abs(pts[0] - pts[-1]).max() > tol * (1 + np.abs(pts).max()):
            raise ClassMismatch("loop component does not close")
        return ShapeLoop(pts[:-1].copy(), "None")
    a, b = _on_axis(pts[0], tol), _on_axis(pts[-1], tol)
    if a is None or b is None:
        raise ClassMismatch(f"arc endpoints {pts[0]}, {pts[-1]} are not on the axes")
    if cls == "Hyperbolic":
        if {a, b} != {"X", "Y"}:
            raise ClassMismatch(f"hyperbolic arc with endpoints on axes {a}, {b}")
        return ShapeLoop(np.vstack([pts, [[0.0, 0.0]]]), "ViaOrigin")
    want = "X" if cls == "NullX" else "Y"
    if a != want or b != want:
        raise ClassMismatch(f"{cls} arc with endpoints on axes {a}, {b}")
    return ShapeLoop(pts.copy(), "AlongAxis")


def omega_integral(chain) -> float:
    """Sum over the closed chain of y_i x_{i+1} - x_i y_{i+1}."""
    pts = [tuple(p) for p in chain]
    n = len(pts)
    return math.fsum(pts[i][1] * pts[(i + 1) % n][0] - pts[i][0] * pts[(i + 1) % n][1] for i in range(n))


def loop_area(loop: ShapeLoop) -> float:
    return signed_area(loop.points)


# --- curved integration of omega ----------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _hermite(p0, p1, m0, m1, u):
    u = u[:, None, None, None]
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    d00 = 6 * u**2 - 6 * u
    d10 = 3 * u**2 - 4 * u + 1
    d01 = -6 * u**2 + 6 * u
    d11 = 3 * u**2 - 2 * u
    pos = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1
    vel = d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1
    return pos, vel


def curved_omega(samples: list[Sample]) -> float:
    """Integral of omega along the component, rectangles interpolated by cubic Hermite.

    Between consecutive samples every vertex runs along one polygon edge; the
    stored vertex velocities give the end tangents, so the quadrature error is
    fourth order in the step instead of the second order of the chord chain.
    """
    if len(samples) < 2:
        return 0.0
    if any(s.vin is None or s.vout is None for s in samples):
        pts = [(s.X, s.Y) for s in samples]
        return math.fsum(pts[i][1] * pts[i + 1][0] - pts[i][0] * pts[i + 1][1] for i in range(len(pts) - 1))
    R = np.array([s.rect.vertices for s in samples], dtype=float)  # (m,4,2)
    vin = np.array([s.vin for s in samples], dtype=float)
    vout = np.array([s.vout for s in samples], dtype=float)
    p0, p1 = R[:-1], R[1:]
    step = np.sqrt(((p1 - p0) ** 2).sum(axis=2)).max(axis=1)
    m0 = vout[:-1] * step[:, None, None]
    m1 = vin[1:] * step[:, None, None]
    pos, vel = _hermite(p0[None], p1[None], m0[None], m1[None], _GL_X)  # (q,m,4,2)
    a = pos[:, :, 0] - pos[:, :, 1]
    b = pos[:, :, 1] - pos[:, :, 2]
    da = vel[:, :, 0] - vel[:, :, 1]
    db = vel[:, :, 1] - vel[:, :, 2]
    X = np.hypot(a[..., 0], a[..., 1])
    Y = np.hypot(b[..., 0], b[..., 1])
    with np.errstate(invalid="ignore", divide="ignore"):
        dX = np.where(X > 0, (a * da).sum(-1) / X, np.hypot(da[..., 0], da[..., 1]))
        dY = np.where(Y > 0, (b * db).sum(-1) / Y, np.hypot(db[..., 0], db[..., 1]))
    integrand = Y * dX - X * dY
    return float(math.fsum((_GL_W[:, None] * integrand).sum(axis=0)))


def component_area(comp: ArcComponent) -> float:
    """Signed area of the shape loop, with curved segments (augmentations carry no omega)."""
    return -0.5 * curved_omega(comp.samples)


# --- region areas ------------------------------------------------------------------

def _arc_chain(poly: Polygon, s0: float, s1: float, p0, p1, tol: float):
    per = poly.perimeter
    gap = (s1 - s0) % per
    if gap > per - tol or gap <= tol:
        return None
    chain = [p0]
    for k in range(poly.n):
        c = (poly.cum[k] - s0) % per
        if tol < c < gap - tol:
            chain.append((c, poly.vertices[k]))
    body = [p for _, p in sorted(chain[1:])]
    return [p0] + body + [p1]


def region_areas(poly: Polygon, rect: LabeledRectangle, params=None, check: bool = True) -> RegionAreas:
    """Signed areas A_j of (counterclockwise arc R_j -> R_{j+1}) + chord back."""
    tol = 1e-12 * poly.perimeter
    if params is None:
        params = [boundary_param(poly, v) for v in rect.vertices]
    if check and not cyclic_order_ok(params, poly.perimeter, directed=True, tol=1e-9 * poly.perimeter):
        raise NotGracing(f"vertices at parameters {params} are not in counterclockwise order")
    out = []
    v = rect.vertices
    for j in range(4):
        k = (j + 1) % 4
        chain = _arc_chain(poly, params[j], params[k], v[j], v[k], tol)
        out.append(0.0 if chain is None else signed_area(chain))
    return RegionAreas(*out)


def sample_params(poly: Polygon, s: Sample):
    return [(poly.cum[s.quad[j]] + s.t[j]) % poly.perimeter for j in range(4)]


def invariant_A(poly: Polygon, s: Sample) -> float:
    return region_areas(poly, s.rect, sample_params(poly, s), check=False).A


# --- differential identity ------------------------------------------------------------

def _neighbours(chart, t, h):
    """Points of the chart's curve at rectangle distance about +-h from ``t``."""
    out = []
    if chart.kind in LINE_KINDS:
        br = chart.branch_at(t)
        if br is None:
            return None
        d = br.direction
    else:
        try:
            d = chart.tangent_at(t)
        except SingularPoint:
            return None
    sp = chart.rect_speed(d)
    for sign in (-1.0, 1.0):
        dt = sign * h / sp
        p = (t[0] + dt * d[0], t[1] + dt * d[1], t[2] + dt * d[2])
        if chart.kind not in LINE_KINDS:
            res = chart.correct(p)
            if res is None:
                return None
            p = res[0]
        if not chart.in_box(p):
            return None
        out.append(p)
    return out


def _residual(poly, chart, quad, tm, tc, tp, sigma):
    vals = []
    for t in (tm, tc, tp):
        rect = chart.rectangle(t)
        p4 = chart.params4(t)
        params = [(poly.cum[quad[j]] + p4[j]) % poly.perimeter for j in range(4)]
        vals.append((region_areas(poly, rect, params, check=False).A, rect.X, rect.Y, rect))
    (Am, Xm, Ym, rm), (_, Xc, Yc, _), (Ap, Xp, Yp, rp) = vals
    dtau = max(abs(a - b) for a, b in zip(chart.params4(tp), chart.params4(tm)))
    return abs((Ap - Am) - sigma * (Yc * (Xp - Xm) - Xc * (Yp - Ym))) / dtau


def differential_residuals(poly: Polygon, comp: ArcComponent, h: float, centres: int = 40, cache: ChartCache | None = None):
    """Central-difference residuals of dA - sigma (Y dX - X dY) at up to ``centres`` samples.

    Differences stay inside one chart; ``sigma`` is the label orientation of the
    rectangles (+1 for counterclockwise labels).
    """
    cache = cache or ChartCache(poly)
    sigma = comp.orientation
    samples = comp.samples
    idx = np.unique(np.linspace(1, len(samples) - 2, min(centres, max(len(samples) - 2, 0))).astype(int)) if len(samples) > 2 else []
    out = []
    for i in idx:
        s = samples[i]
        if min(s.X, s.Y) < 4 * h:
            continue
        chart = cache.get(s.quad)
        if chart is None:
            continue
        t = s.t[:3]
        nb = _neighbours(chart, t, h)
        if nb is None:
            continue
        out.append((int(i), _residual(poly, chart, s.quad, nb[0], t, nb[1], sigma)))
    return out


def check_differential(poly: Polygon, comp: ArcComponent, h: float, centres: int = 40) -> float:
    res = differential_residuals(poly, comp, h, centres)
    return max((r for _, r in res), default=0.0)


@dataclass
class ConvergenceReport:
    h: float
    coarse: float
    fine: float
    centres: int
    floor: float

    @property
    def ratio(self) -> float:
        return self.coarse / self.fine if self.fine > 0 else math.inf

    @property
    def passed(self) -> bool:
        # residuals already at rounding level cannot shrink further
        return self.coarse <= self.floor or self.ratio >= 3.0


def convergence_ratio(poly: Polygon, comp: ArcComponent, h: float | None = None, centres: int = 40) -> ConvergenceReport:
    """Residual at spacing h and h/2 on the same centres."""
    h = h if h is not None else 1e-3 * poly.perimeter
    cache = ChartCache(poly)
    coarse = dict(differential_residuals(poly, comp, h, centres, cache))
    fine = dict(differential_residuals(poly, comp, h / 2, centres, cache))
    common = sorted(set(coarse) & set(fine))
    c = max((coarse[i] for i in common), default=0.0)
    f = max((fine[i] for i in common), default=0.0)
    floor = 1e-9 * abs(poly.area) / poly.perimeter
    return ConvergenceReport(h, c, f, len(common), floor)


# --- sweep verification ---------------------------------------------------------------

@dataclass
class SweepResult:
    cls: str
    shape_area: float
    chord_area: float
    target: float
    residual: float
    tol: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "class": self.cls,
            "shape_area": self.shape_area,
            "chord_area": self.chord_area,
            "target": self.target,
            "residual": self.residual,
            "tolerance": self.tol,
            "pass": self.passed,
        }


def verify_sweep(poly: Polygon, comp: ArcComponent, rel_tol: float = 1e-6, c_hmax: float = 0.0, h_max: float = 0.0) -> SweepResult:
    """Hyperbolic shape loops enclose area(P) up to sign; null arcs and loops enclose zero."""
    curve = shape_curve(comp)
    loop = shape_loop(curve)
    chord = float(loop_area(loop))
    area = component_area(comp)
    P = abs(poly.area)
    tol = max(rel_tol * P, c_hmax * h_max**2)
    if comp.cls == "Hyperbolic":
        target = P
        residual = abs(abs(area) - P)
    else:
        target = 0.0
        residual = abs(area)
    return SweepResult(comp.cls, area, chord, target, residual, tol, residual <= tol)


def integrated_identity(poly: Polygon, comp: ArcComponent) -> tuple[float, float]:
    """(A(end) - A(start), sigma * integral of omega along the curve): equal by the sweep formula."""
    a0 = invariant_A(poly, comp.samples[0])
    a1 = invariant_A(poly, comp.samples[-1])
    return a1 - a0, comp.orientation * curved_omega(comp.samples)
