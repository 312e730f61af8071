"""Random generic polygons for the test corpus."""

from __future__ import annotations

import math

import numpy as np

from .diameters import find_diameters
from .geometry import PolygonError, Polygon, cross, validate_polygon


class GenerationBudgetExceeded(RuntimeError):
    pass


PARALLEL_TOL = 1e-3  # well inside the required 1e-6 angular separation
ROBUST_TOL = 1e-3  # diameter classification must not change at this tolerance


def _draw(rng: np.random.Generator, n: int) -> list[tuple[float, float]]:
    base = np.arange(n) * 2 * math.pi / n
    jitter = rng.uniform(-0.35, 0.35, n) * 2 * math.pi / n
    angles = np.sort(base + jitter + rng.uniform(0, 2 * math.pi))
    radii = rng.uniform(0.6, 1.0, n)
    return [(float(r * math.cos(a)), float(r * math.sin(a))) for r, a in zip(radii, angles)]


def is_generic(poly: Polygon) -> bool:
    """No near-parallel edges and a diameter structure that is stable under tolerance changes."""
    n = poly.n
    for i in range(n):
        for j in range(i + 1, n):
            if abs(cross(poly.directions[i], poly.directions[j])) < PARALLEL_TOL:
                return False
    fine = find_diameters(poly)
    coarse = find_diameters(poly, ROBUST_TOL)
    if not fine.generic or not coarse.generic or fine.tricky or coarse.tricky:
        return False
    key = lambda rep: sorted((round(d.q1.s, 9), round(d.q2.s, 9), d.orientation) for d in rep.diameters)
    if key(fine) != key(coarse):
        return False
    # feet too close to a vertex make the vertex/edge distinction fragile
    tol = ROBUST_TOL * poly.perimeter
    for d in fine.diameters:
        for ep in (d.q1, d.q2):
            if ep.vertex is None:
                t = ep.s - poly.cum[ep.edge]
                if t < tol or t > poly.lengths[ep.edge] - tol:
                    return False
    return True


def random_polygon(rng: np.random.Generator, n: int, max_tries: int = 1000) -> Polygon:
    for _ in range(max_tries):
        try:
            poly = validate_polygon(_draw(rng, n))
        except PolygonError:
            continue
        if is_generic(poly):
            return poly
    raise GenerationBudgetExceeded(f"no generic {n}-gon after {max_tries} draws")


def generate(n: int, count: int, seed: int) -> list[Polygon]:
    """``count`` random generic n-gons; deterministic in ``seed``."""
    if n < 3:
        raise ValueError("need n >= 3")
    rng = np.random.default_rng(seed)
    return [random_polygon(rng, n) for _ in range(count)]


def corpus(count: int = 100, seed: int = 0, sizes=(5, 6, 7, 8, 9)) -> list[Polygon]:
    """The acceptance corpus: polygon ``i`` has ``sizes[i % len(sizes)]`` vertices."""
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        out.append(random_polygon(rng, sizes[i % len(sizes)]))
    return out
