"""Brute-force finder of gracing rectangles by two-point shooting.

Independent of the chart machinery: two boundary points fix a side of the
rectangle, the opposite side is found by walking along the normal until the
boundary is hit, and near-hits are polished by Gauss-Newton on the four
boundary parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import LabeledRectangle, Point, Polygon, boundary_point, cyclic_order_ok, distance_to_boundary


class NotConverged(RuntimeError):
    pass


class EdgeAssignmentChanged(RuntimeError):
    """A vertex crossed a polygon vertex during refinement."""


@dataclass(frozen=True)
class OracleHit:
    rect: LabeledRectangle
    params: tuple[float, float, float, float]
    residual: float
    refined: bool = False
    # the incidence system is rank deficient: the hit sits in a continuum of
    # rectangles (parallel edge pairs), so the polygon is degenerate
    continuum: bool = False


def _arrays(poly: Polygon):
    A = np.array(poly.vertices, dtype=float)
    U = np.array(poly.directions, dtype=float)
    L = np.array(poly.lengths, dtype=float)
    C = np.array(poly.cum, dtype=float)
    return A, U, L, C


def _points(poly: Polygon, s: np.ndarray) -> np.ndarray:
    A, U, L, C = _arrays(poly)
    s = np.mod(s, poly.perimeter)
    e = np.clip(np.searchsorted(C, s, side="right") - 1, 0, poly.n - 1)
    t = s - C[e]
    return A[e] + t[..., None] * U[e]


def _boundary_distance(poly: Polygon, pts: np.ndarray):
    """Distance to the boundary and the boundary parameter of the nearest point."""
    A, U, L, C = _arrays(poly)
    rel = pts[:, None, :] - A[None, :, :]
    t = np.clip(np.einsum("mnk,nk->mn", rel, U), 0.0, L[None, :])
    foot = A[None, :, :] + t[..., None] * U[None, :, :]
    d = np.hypot(*(pts[:, None, :] - foot).transpose(2, 0, 1))
    k = np.argmin(d, axis=1)
    rows = np.arange(len(pts))
    return d[rows, k], C[k] + t[rows, k]


def _ray_hits(poly: Polygon, P2: np.ndarray, Nrm: np.ndarray, h_min: float):
    """All (pair index, h, boundary param) with P2 + h*Nrm on the boundary, h != 0."""
    A, U, L, C = _arrays(poly)
    idx, hs, ss = [], [], []
    for e in range(poly.n):
        a, u, ln = A[e], U[e], L[e]
        # P2 + h n = a + mu u
        den = Nrm[:, 0] * (-u[1]) - Nrm[:, 1] * (-u[0])
        w = a[None, :] - P2
        ok = np.abs(den) > 1e-14
        with np.errstate(divide="ignore", invalid="ignore"):
            h = (w[:, 0] * (-u[1]) - w[:, 1] * (-u[0])) / den
            mu = (Nrm[:, 0] * w[:, 1] - Nrm[:, 1] * w[:, 0]) / den
        good = ok & (np.abs(h) > h_min) & (mu >= 0.0) & (mu < ln)
        sel = np.nonzero(good)[0]
        idx.append(sel)
        hs.append(h[sel])
        ss.append(C[e] + mu[sel])
    return np.concatenate(idx), np.concatenate(hs), np.concatenate(ss)


def _shoot_batch(poly: Polygon, S1: np.ndarray, S2: np.ndarray, tol: float):
    """Shoot along the normal from both base points.

    Shooting from p2 and testing p1 + h n misses rectangles whose R2R3 side lies
    along an edge (the ray is collinear with it), so the roles are also swapped.
    """
    P1, P2 = _points(poly, S1), _points(poly, S2)
    D = P2 - P1
    nrm = np.hypot(D[:, 0], D[:, 1])
    keep = nrm > 1e-12 * poly.perimeter
    Nrm = np.zeros_like(D)
    Nrm[keep] = np.stack([-D[keep, 1], D[keep, 0]], axis=1) / nrm[keep, None]
    rows = np.nonzero(keep)[0]
    parts = []
    for shooter, other in ((P2, P1), (P1, P2)):
        idx, h, s_ray = _ray_hits(poly, shooter[keep], Nrm[keep], 1e-12 * poly.perimeter)
        base = rows[idx]
        Q = other[base] + h[:, None] * Nrm[base]
        d, s_near = _boundary_distance(poly, Q)
        near = d <= tol
        if shooter is P2:
            s3, s4 = s_ray[near], s_near[near]
        else:
            s3, s4 = s_near[near], s_ray[near]
        parts.append((S1[base][near], S2[base][near], s3, s4, h[near], d[near]))
    return tuple(np.concatenate(cols) for cols in zip(*parts))


def shoot(poly: Polygon, s1: float, s2: float, tol: float | None = None) -> list[OracleHit]:
    """Near-hit rectangles with side ``beta(s1) -> beta(s2)`` (both normal directions)."""
    if tol is None:
        tol = 2 * poly.perimeter / (10 * poly.n)
    S1, S2, S3, S4, H, D4 = _shoot_batch(poly, np.array([float(s1)]), np.array([float(s2)]), tol)
    out = []
    p1, p2 = boundary_point(poly, s1), boundary_point(poly, s2)
    dx, dy = p2.x - p1.x, p2.y - p1.y
    ln = math.hypot(dx, dy)
    for h, s3, s4, d4 in zip(H, S3, S4, D4):
        nx, ny = -dy / ln * h, dx / ln * h
        rect = LabeledRectangle.from_points((p1, p2, (p2.x + nx, p2.y + ny), (p1.x + nx, p1.y + ny)))
        out.append(OracleHit(rect, (s1 % poly.perimeter, s2 % poly.perimeter, float(s3), float(s4)), float(d4)))
    return out


def _system(A, U, e, t, per):
    """Closure and right-angle residuals with their (k, 3, 4) Jacobian in the edge parameters."""
    u = U[e]  # (k,4,2)
    R = A[e] + t[..., None] * u
    F12 = R[:, 0] - R[:, 1] + R[:, 2] - R[:, 3]
    a, b = R[:, 0] - R[:, 1], R[:, 2] - R[:, 1]
    F3 = np.einsum("ij,ij->i", a, b) / per
    J = np.zeros((len(e), 3, 4))
    J[:, 0:2, 0] = u[:, 0]
    J[:, 0:2, 1] = -u[:, 1]
    J[:, 0:2, 2] = u[:, 2]
    J[:, 0:2, 3] = -u[:, 3]
    J[:, 2, 0] = np.einsum("ij,ij->i", u[:, 0], b) / per
    J[:, 2, 1] = -(np.einsum("ij,ij->i", u[:, 1], b) + np.einsum("ij,ij->i", a, u[:, 1])) / per
    J[:, 2, 2] = np.einsum("ij,ij->i", a, u[:, 2]) / per
    return np.column_stack([F12, F3]), J


def _refine_batch(poly: Polygon, S: np.ndarray, tol: float, max_iter: int = 60):
    """Gauss-Newton (minimum-norm steps) on the closure and right-angle residuals.

    Edge assignments are re-dispatched whenever a parameter leaves its edge.
    Returns refined parameters and a convergence mask.
    """
    A, U, L, C = _arrays(poly)
    per = poly.perimeter
    S = np.mod(S, per)
    E = np.clip(np.searchsorted(C, S, side="right") - 1, 0, poly.n - 1)
    T = S - C[E]
    m = len(S)
    done = np.zeros(m, dtype=bool)
    cap = 0.1 * per
    for _ in range(max_iter):
        act = ~done
        if not act.any():
            break
        e, t = E[act], T[act]
        F, J = _system(A, U, e, t, per)
        conv = np.abs(F).max(axis=1) <= tol
        step = -(np.linalg.pinv(J, rcond=1e-12) @ F[..., None])[..., 0]
        big = np.abs(step).max(axis=1)
        scale = np.where(big > cap, cap / np.maximum(big, 1e-300), 1.0)
        step *= scale[:, None]
        step[conv] = 0.0
        t = t + step
        # re-dispatch across polygon vertices
        for _ in range(poly.n):
            lo = t < 0
            if lo.any():
                e = np.where(lo, (e - 1) % poly.n, e)
                t = np.where(lo, t + L[e], t)
            hi = t > L[e]
            if hi.any():
                t = np.where(hi, t - L[e], t)
                e = np.where(hi, (e + 1) % poly.n, e)
            if not (lo.any() or hi.any()):
                break
        ids = np.nonzero(act)[0]
        E[ids], T[ids] = e, t
        done[ids[conv]] = True
    return C[E] + T, done


def newton_refine(poly: Polygon, approx: OracleHit, tol: float | None = None) -> LabeledRectangle:
    if tol is None:
        tol = 1e-13 * poly.perimeter
    S, ok = _refine_batch(poly, np.array([approx.params], dtype=float), tol)
    if not ok[0]:
        raise NotConverged(f"refinement from {approx.params} did not converge")
    return LabeledRectangle.from_points(_points(poly, S[0]))


def _grid(poly: Polygon, n: int) -> np.ndarray:
    m = n * poly.n
    # offset by half a cell so samples avoid polygon vertices
    return (np.arange(m) + 0.5) * poly.perimeter / m


def sample_all(poly: Polygon, n: int = 40, min_size: float = 1e-6, coarse: float = 2.0) -> list[OracleHit]:
    """Refined, deduplicated gracing rectangles from an (nN x nN) shooting grid.

    Hits whose shorter side is below ``min_size * perimeter`` are dropped;
    the degenerate rectangles are the diameters, found elsewhere.
    """
    if n < 2:
        raise ValueError("grid density must be at least 2")
    per = poly.perimeter
    g = _grid(poly, n)
    tol = coarse * per / (n * poly.n)
    S1, S2 = np.meshgrid(g, g, indexing="ij")
    S1, S2 = S1.ravel(), S2.ravel()
    off = S1 != S2
    s1, s2, s3, s4, h, d4 = _shoot_batch(poly, S1[off], S2[off], tol)
    if len(s1) == 0:
        return []
    S0 = np.column_stack([s1, s2, s3, s4])
    S, ok = _refine_batch(poly, S0, 1e-13 * per)
    S, d4 = S[ok], d4[ok]
    # every cyclic relabeling of a gracing rectangle graces too; shooting is
    # ill-conditioned when R1R2 is the short side, so emit all four
    S = np.concatenate([np.roll(S, -k, axis=1) for k in range(4)])
    d4 = np.tile(d4, 4)
    pts = _points(poly, S.reshape(-1)).reshape(-1, 4, 2)
    X = np.hypot(*(pts[:, 0] - pts[:, 1]).T)
    Y = np.hypot(*(pts[:, 1] - pts[:, 2]).T)
    big = np.minimum(X, Y) > min_size * per
    S, pts, d4 = S[big], pts[big], d4[big]
    graced = np.array([cyclic_order_ok(row, per, directed=True, tol=1e-9 * per) for row in S], dtype=bool)
    S, pts, d4 = S[graced], pts[graced], d4[graced]
    if len(S) == 0:
        return []
    # deterministic order, then greedy dedupe on the max-vertex metric
    flat = pts.reshape(len(pts), 8)
    order = np.lexsort(flat.T[::-1])
    flat, S, d4 = flat[order], S[order], d4[order]
    tree = cKDTree(flat)
    dup_r = 1e-9 * per
    taken = np.zeros(len(flat), dtype=bool)
    keep = []
    for i in range(len(flat)):
        if taken[i]:
            continue
        keep.append(i)
        for j in tree.query_ball_point(flat[i], dup_r, p=np.inf):
            taken[j] = True
    cont = _rank_deficient(poly, S[keep])
    out = []
    for i, c in zip(keep, cont):
        rect = LabeledRectangle.from_points(flat[i].reshape(4, 2))
        out.append(OracleHit(rect, tuple(float(x) % per for x in S[i]), float(d4[i]), True, bool(c)))
    return out


def _rank_deficient(poly: Polygon, S: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    A, U, L, C = _arrays(poly)
    S = np.mod(S, poly.perimeter)
    E = np.clip(np.searchsorted(C, S, side="right") - 1, 0, poly.n - 1)
    _, J = _system(A, U, E, S - C[E], poly.perimeter)
    return np.linalg.svd(J, compute_uv=False)[:, -1] <= tol


def _sample_matrix(components) -> np.ndarray:
    rows = [[c for v in s.rect.vertices for c in v] for comp in components for s in comp.samples]
    return np.array(rows, dtype=float).reshape(-1, 8)


def hit_distances(hits: list[OracleHit], components) -> np.ndarray:
    """Max-vertex distance from each hit to the nearest traced sample."""
    if not hits:
        return np.zeros(0)
    M = _sample_matrix(components)
    if len(M) == 0:
        return np.full(len(hits), np.inf)
    H = np.array([[c for v in h.rect.vertices for c in v] for h in hits])
    d, _ = cKDTree(M).query(H, p=np.inf)
    return d


def sample_distances(hits: list[OracleHit], components) -> np.ndarray:
    """Max-vertex distance from each traced sample to the nearest oracle hit."""
    M = _sample_matrix(components)
    if not hits:
        return np.full(len(M), np.inf)
    H = np.array([[c for v in h.rect.vertices for c in v] for h in hits])
    d, _ = cKDTree(H).query(M, p=np.inf)
    return d


def unmatched_hits(poly: Polygon, hits: list[OracleHit], components, radius: float):
    """Hits farther than ``radius`` from every traced sample, as (rect, params)."""
    d = hit_distances(hits, components)
    return [(h.rect, h.params) for h, di in zip(hits, d) if di > radius]


def check_hit(poly: Polygon, rect: LabeledRectangle, tol: float | None = None) -> bool:
    tol = poly.eps_geo if tol is None else tol
    return all(distance_to_boundary(poly, v) <= tol for v in rect.vertices) and rect.check()
