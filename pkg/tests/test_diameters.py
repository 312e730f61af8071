import math

import numpy as np
import pytest

from pegtrace.diameters import (
    Chord,
    classify_extremum,
    delta_plus,
    edge_endpoint,
    enumerate_candidates,
    find_diameters,
    is_diameter,
    orientation_sign,
    vertex_endpoint,
)
from pegtrace.generate import corpus
from pegtrace.geometry import boundary_point, cross, validate_polygon

OBTUSE = validate_polygon([(0, 0), (4, 0), (1, 1)])


def _vertex(poly, xy):
    return vertex_endpoint(poly, poly.vertices.index(xy))


def _chord(poly, a, b):
    return Chord(_vertex(poly, a), _vertex(poly, b))


def _foot():
    # (1,1) down onto the bottom edge
    e = next(i for i in range(3) if OBTUSE.vertices[i] == (0, 0))
    return Chord(_vertex(OBTUSE, (1, 1)), edge_endpoint(OBTUSE, e, 1.0))


def test_candidates_obtuse():
    pairs = {frozenset((c.a.point, c.b.point)) for c in enumerate_candidates(OBTUSE)}
    for a, b in [((0, 0), (4, 0)), ((4, 0), (1, 1)), ((0, 0), (1, 1)), ((1, 1), (1, 0))]:
        assert frozenset((a, b)) in pairs


def test_candidates_square_family():
    sq = validate_polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    rep = find_diameters(sq)
    assert len(rep.families) == 2
    assert not rep.generic


def test_convex_vertex_pairs():
    p = validate_polygon([(math.cos(a), math.sin(a)) for a in np.linspace(0, 2 * math.pi, 8)[:-1]])
    vv = [c for c in enumerate_candidates(p) if c.a.vertex is not None and c.b.vertex is not None]
    assert len(vv) == 7 * 6 // 2


def test_is_diameter_obtuse():
    assert is_diameter(OBTUSE, _chord(OBTUSE, (0, 0), (4, 0)))
    assert not is_diameter(OBTUSE, _chord(OBTUSE, (0, 0), (1, 1)))
    assert is_diameter(OBTUSE, _foot())


def test_obtuse_orientation_and_type():
    long_side = _chord(OBTUSE, (0, 0), (4, 0))
    assert orientation_sign(OBTUSE, long_side) == 1
    assert orientation_sign(OBTUSE, _foot()) == 1
    assert classify_extremum(OBTUSE, long_side) == "Max"
    assert classify_extremum(OBTUSE, _foot()) == "Flat"
    rep = find_diameters(OBTUSE)
    assert rep.delta_plus == 2 == delta_plus(OBTUSE)
    d = next(d for d in rep.diameters if d.length == 4.0)
    assert d.stable and not d.tricky


def test_right_triangle_tricky():
    rt = validate_polygon([(0, 0), (4, 0), (0, 3)])
    chord = _chord(rt, (0, 0), (0, 3))
    rep = find_diameters(rt)
    assert any({d.q1.point, d.q2.point} == {chord.a.point, chord.b.point} for d in rep.tricky)


def test_saddle_in_notched_hexagon():
    p = validate_polygon([(0, 0), (2, -1), (4, 0), (4, 3), (2, 1), (0, 3)])
    assert "Saddle" in [d.extremum for d in find_diameters(p).diameters]


def test_parallel_family_not_stable_not_counted():
    sq = validate_polygon([(0, 0), (2, 0), (2, 1), (0, 1)])
    rep = find_diameters(sq)
    assert rep.families and all(c.family for c in rep.families)
    assert all(not (d.q1.vertex is None and d.q2.vertex is None) for d in rep.diameters)


def _signature(rep):
    return sorted((round(d.length, 9), d.orientation, d.extremum, d.stable, d.tricky) for d in rep.diameters)


@pytest.mark.parametrize("idx", [0, 3, 11])
def test_rigid_motion_and_scaling(idx):
    p = corpus(idx + 1)[idx]
    base = find_diameters(p)
    c, s = math.cos(0.7), math.sin(0.7)
    moved = find_diameters(p.transformed(lambda v: (c * v[0] - s * v[1] + 3, s * v[0] + c * v[1] - 1)))
    assert _signature(moved) == _signature(base)
    big = find_diameters(p.transformed(lambda v: (2.5 * v[0], 2.5 * v[1])))
    assert [x[0] * 2.5 for x in _signature(base)] == pytest.approx([x[0] for x in _signature(big)])
    assert [x[1:] for x in _signature(base)] == [x[1:] for x in _signature(big)]
    mirror = find_diameters(p.transformed(lambda v: (-v[0], v[1])))
    assert sorted(d.orientation for d in mirror.diameters) == sorted(d.orientation for d in base.diameters)


def test_edge_feet_perpendicular():
    for p in corpus(10):
        for d in find_diameters(p).diameters:
            v = (d.q2.point.x - d.q1.point.x, d.q2.point.y - d.q1.point.y)
            for ep in (d.q1, d.q2):
                if ep.vertex is None:
                    u = p.directions[ep.edge]
                    assert abs(u[0] * v[0] + u[1] * v[1]) <= 1e-9 * d.length


def test_convex_longest_chord_is_max():
    p = validate_polygon([(0, 0), (5, 0), (6, 2), (3, 4), (0, 3)])
    rep = find_diameters(p)
    longest = max(rep.diameters, key=lambda d: d.length)
    assert longest.extremum == "Max"


# --- brute-force oracle ------------------------------------------------------------

def _oracle_positive(poly, delta=1e-6):
    """Positive diameters found by probing the boundary a small step either side of each endpoint."""
    per = poly.perimeter
    n = poly.n
    params = list(poly.cum)
    chords = [(params[i], params[j]) for i in range(n) for j in range(i + 1, n)]
    for i, v in enumerate(poly.vertices):
        for e in range(n):
            a, u, ln = poly.edge(e)
            t = (v[0] - a[0]) * u[0] + (v[1] - a[1]) * u[1]
            if 1e-9 * per < t < ln - 1e-9 * per and e not in (i, (i - 1) % n):
                chords.append((params[i], poly.cum[e] + t))
    found = 0
    for s1, s2 in chords:
        q1, q2 = boundary_point(poly, s1), boundary_point(poly, s2)
        v = np.subtract(q2, q1)
        v /= np.linalg.norm(v)
        lefts = []
        ok = True
        for s, sign in ((s1, 1), (s2, -1)):
            q = boundary_point(poly, s)
            fwd = np.subtract(boundary_point(poly, s + delta), q) / delta
            bwd = np.subtract(boundary_point(poly, s - delta), q) / delta
            along = [sign * np.dot(fwd, v), sign * np.dot(bwd, v)]
            if all(abs(x) < 1e-9 for x in along):
                pass
            elif min(along) * max(along) <= 0:
                ok = False
            # P1 runs counterclockwise from q1 to q2: forward at q1, backward at q2
            p1, p2 = (fwd, bwd) if sign == 1 else (bwd, fwd)
            lefts.append(cross(p1, v) < cross(p2, v))
        if ok and lefts[0] == lefts[1]:
            found += 1
    return found


def test_delta_plus_matches_oracle():
    for p in corpus(25)[::4]:
        assert delta_plus(p) == _oracle_positive(p)
