import math

import numpy as np
import pytest

from pegtrace.charts import (
    AllParallelToL4,
    ConicKind,
    EdgeQuadruple,
    OffHyperplane,
    SingularPoint,
    build_chart,
    chart_components,
    detect_degenerate,
    point_from_params,
    quadruple_is_degenerate,
    tangent_at,
)

# square side-lines y=0, x=2, y=2, x=0
SIDES = [((0, 0), (1, 0), 2.0), ((2, 0), (0, 1), 2.0), ((0, 2), (1, 0), 2.0), ((0, 0), (0, 1), 2.0)]


@pytest.fixture
def square():
    return build_chart(EdgeQuadruple.from_segments(SIDES))


def test_square_coefficients(square):
    assert square.c == pytest.approx((-2, 1, 0, 1))
    assert square.kind == ConicKind.CROSSING_LINES


def test_square_branches_are_the_closed_form_lines(square):
    for t1 in np.linspace(0, 2, 9):
        for t2 in (t1, 2 - t1):
            t = (t1, t2, 2 - t1)
            assert abs(square.pi(t)) <= 1e-12
            assert abs(square.q(t)) <= 1e-12
            assert square.rectangle(t).check()
    dirs = sorted(tuple(np.round(np.abs(b.direction), 9)) for b in square.branches)
    s = round(1 / math.sqrt(3), 9)
    assert dirs == [(s, s, s), (s, s, s)]


def test_perturbed_square_nondegenerate():
    segs = SIDES[:3] + [((0, 0), (0.6, 0.8), 2.0)]
    ch = build_chart(EdgeQuadruple.from_segments(segs))
    assert ch.c == pytest.approx((-2.8, 0.8, 0.6, 0.8))
    assert ch.kind not in (ConicKind.DEGENERATE_PLANE, ConicKind.EMPTY, ConicKind.CROSSING_LINES)
    # classification agrees with the sign pattern of the reduced conic on a grid
    lead = ch.reduced[:2, :2]
    det = np.linalg.det(lead)
    expected = ConicKind.ELLIPSE if det > 0 else ConicKind.HYPERBOLA if det < 0 else ConicKind.PARABOLA
    assert ch.kind == expected


def test_all_horizontal():
    h = [((0, y), (1, 0), 1.0) for y in range(4)]
    with pytest.raises(AllParallelToL4):
        build_chart(EdgeQuadruple.from_segments(h))


def test_point_from_params(square):
    r = point_from_params(square, 1, 1, 1)
    assert r.vertices == ((1, 0), (2, 1), (1, 2), (0, 1))
    assert r.X == pytest.approx(math.sqrt(2)) and r.Y == pytest.approx(math.sqrt(2))
    r = point_from_params(square, 0, 0, 2)
    assert r.vertices == ((0, 0), (2, 0), (2, 2), (0, 2))
    assert square.q((0, 0, 2)) == pytest.approx(0)
    with pytest.raises(OffHyperplane):
        point_from_params(square, 1, 1, 0)


def test_tangent(square):
    d = tangent_at(square, (0.5, 0.5, 1.5))
    assert np.allclose(np.abs(d), 1 / math.sqrt(3))
    assert d[0] * d[2] < 0 and d[0] * d[1] > 0
    with pytest.raises(SingularPoint):
        tangent_at(square, (1, 1, 1))


def test_tangent_orthogonal_to_gradients():
    segs = SIDES[:3] + [((0, 0), (0.6, 0.8), 2.0)]
    ch = build_chart(EdgeQuadruple.from_segments(segs))
    comps = chart_components(ch)
    assert comps
    for comp in comps:
        for t in comp[:: max(len(comp) // 5, 1)]:
            try:
                d = tangent_at(ch, t)
            except SingularPoint:
                continue
            g = ch.grad_q(t)
            n = ch.c[1:]
            assert abs(np.dot(d, g)) <= 1e-10 * (1 + np.linalg.norm(g))
            assert abs(np.dot(d, n)) <= 1e-10


def test_square_components(square):
    comps = chart_components(square)
    assert len(comps) == 2
    for comp in comps:
        for t in comp:
            assert square.in_box(t, 1e-9)
            assert abs(square.q(t)) <= square.eps_alg * 10


def test_empty_box():
    # right angle impossible: L2 far away makes Q positive on the box
    segs = [((0, 0), (1, 0), 1.0), ((10, 5), (1, 0), 1.0), ((0, 10), (1, 0), 1.0), ((0, 0), (0, 1), 1.0)]
    ch = build_chart(EdgeQuadruple.from_segments(segs))
    assert chart_components(ch) == []


def test_degeneracy():
    assert not detect_degenerate(build_chart(EdgeQuadruple.from_segments(SIDES)))
    segs = SIDES[:3] + [((0, 0), (0.6, 0.8), 2.0)]
    assert not detect_degenerate(build_chart(EdgeQuadruple.from_segments(segs)))
    # chord sliding between two parallel edges: a continuum of isometric rectangles
    bottom, top = ((0, 0), (1, 0), 3.0), ((3, 1), (-1, 0), 3.0)
    assert quadruple_is_degenerate(EdgeQuadruple.from_segments([bottom, bottom, top, top]))


def test_component_bound_on_random_quadruples():
    rng = np.random.default_rng(3)
    for _ in range(40):
        segs = [(rng.uniform(-1, 1, 2), rng.normal(size=2), rng.uniform(0.5, 2)) for _ in range(4)]
        try:
            ch = build_chart(EdgeQuadruple.from_segments(segs))
        except AllParallelToL4:
            continue
        if ch.kind == ConicKind.DEGENERATE_PLANE:
            continue
        assert len(chart_components(ch)) <= 64


def test_grid_sign_changes_near_components():
    from scipy.spatial import cKDTree

    segs = SIDES[:3] + [((0, 0), (0.6, 0.8), 2.0)]
    ch = build_chart(EdgeQuadruple.from_segments(segs))
    pts = np.array([t for comp in chart_components(ch) for t in comp])
    k = ch.eliminated
    free = [j for j in range(3) if j != k]
    n = 400
    g = np.linspace(0, 2, n + 1)
    S1, S2 = np.meshgrid(g, g, indexing="ij")
    C = ch.reduced
    q = C[0, 0] * S1**2 + 2 * C[0, 1] * S1 * S2 + C[1, 1] * S2**2 + 2 * C[0, 2] * S1 + 2 * C[1, 2] * S2 + C[2, 2]
    sgn = np.sign(q)
    change = (sgn[:-1, :-1] != sgn[1:, :-1]) | (sgn[:-1, :-1] != sgn[:-1, 1:]) | (sgn[:-1, :-1] != sgn[1:, 1:])
    tree = cKDTree(pts)
    cell = 2 / n
    far = checked = 0
    for i, j in zip(*np.nonzero(change)):
        t = [0.0, 0.0, 0.0]
        t[free[0]], t[free[1]] = g[i] + cell / 2, g[j] + cell / 2
        t[k] = -(ch.c[0] + sum(ch.c[1 + m] * t[m] for m in free)) / ch.c[1 + k]
        if not ch.in_box(t, -2 * cell):  # only cells clearly inside the box
            continue
        d, _ = tree.query(t)
        far += d > 3 * cell
        checked += 1
    assert checked > 100
    assert far == 0
