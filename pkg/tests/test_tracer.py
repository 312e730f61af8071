import numpy as np
import pytest

from pegtrace.diameters import find_diameters
from pegtrace.generate import corpus
from pegtrace.geometry import LabeledRectangle, rect_distance, validate_polygon
from pegtrace.tracer import (
    ChartCache,
    NoViableChart,
    RepeatBoundViolated,
    Seed,
    TraceConfig,
    TrickyDiameter,
    chart_transition,
    continue_component,
    graces,
    initial_chart,
    inscribing_sequence,
    seed_rectangles,
    shift_component,
    trace_all,
)

OBTUSE = validate_polygon([(0, 0), (4, 0), (1, 1)])
BOTTOM, RIGHT, LEFT = 0, 1, 2  # edges of OBTUSE
NO_ORACLE = TraceConfig(oracle_grid=None)


def family(h):
    return LabeledRectangle.from_points([(h, 0), (4 - 3 * h, 0), (4 - 3 * h, h), (h, h)])


@pytest.fixture(scope="module")
def obtuse_rep():
    return find_diameters(OBTUSE)


def _diam(rep, length):
    return next(d for d in rep.positive if abs(d.length - length) < 1e-12)


def test_seed_rectangles(obtuse_rep):
    seeds = seed_rectangles(OBTUSE, _diam(obtuse_rep, 1.0))
    rects = [s.rect.vertices for s in seeds]
    assert ((1, 0), (1, 0), (1, 1), (1, 1)) in rects
    assert ((1, 0), (1, 1), (1, 1), (1, 0)) in rects
    by_shift = {s.shift: s.rect for s in seeds}
    assert (by_shift[0].X, by_shift[0].Y) == (0, 1)
    assert (by_shift[1].X, by_shift[1].Y) == (1, 0)
    for s in seeds:
        assert s.rect.check()


def _family_seed(rep, h):
    length = 4.0 if h == 0 else 1.0
    return next(s for s in seed_rectangles(OBTUSE, _diam(rep, length)) if rect_distance(s.rect, family(h)) == 0)


def test_initial_chart(obtuse_rep):
    for h in (0, 1):
        seed = _family_seed(obtuse_rep, h)
        quads = {v[0] for v in initial_chart(OBTUSE, seed)}
        assert (BOTTOM, BOTTOM, RIGHT, LEFT) in quads


def test_initial_chart_rejects_non_diameter():
    bogus = LabeledRectangle.from_points([(0, 0), (0, 0), (1, 1), (1, 1)])
    seed = Seed(bogus, (0.0, 0.0, OBTUSE.perimeter - np.sqrt(2), OBTUSE.perimeter - np.sqrt(2)), None, 0)
    assert initial_chart(OBTUSE, seed) == []
    with pytest.raises(NoViableChart):
        continue_component(OBTUSE, seed, NO_ORACLE)


def test_obtuse_closed_form(obtuse_rep):
    seed = _family_seed(obtuse_rep, 0)
    comp = continue_component(OBTUSE, seed, NO_ORACLE, obtuse_rep)
    assert comp.cls == "Hyperbolic"
    worst = 0.0
    for s in comp.samples:
        h = s.rect.vertices[3].y
        worst = max(worst, rect_distance(s.rect, family(h)))
        assert abs(s.X - (4 - 4 * s.Y)) <= 1e-8
    assert worst <= 1e-8
    assert {e.length for e in comp.endpoints} == {1.0, 4.0}
    assert inscribing_sequence(comp) == [(BOTTOM, BOTTOM, RIGHT, LEFT)]


def test_chart_transition():
    assert chart_transition(OBTUSE, (0, 0, 1, 2), 2, 1) == (0, 0, 2, 2)
    assert chart_transition(OBTUSE, (0, 0, 1, 2), 0, 0) == (2, 0, 1, 2)


def test_trace_all_obtuse(obtuse_rep):
    comps = trace_all(OBTUSE, TraceConfig(), obtuse_rep)
    assert len(comps) == 4
    assert all(c.cls == "Hyperbolic" for c in comps)
    assert sorted(c.shift for c in comps) == [0, 1, 2, 3]


def test_tricky_refused():
    with pytest.raises(TrickyDiameter):
        trace_all(validate_polygon([(0, 0), (4, 0), (0, 3)]))


@pytest.fixture(scope="module")
def pentagon():
    p = corpus(8)[7]
    rep = find_diameters(p)
    return p, rep, trace_all(p, TraceConfig(), rep)


def test_arc_count(pentagon):
    p, rep, comps = pentagon
    assert sum(c.is_arc for c in comps) == 2 * rep.delta_plus


def test_sample_invariants(pentagon):
    p, _, comps = pentagon
    h_max = TraceConfig().scaled(p.perimeter)["h_max"]
    eps = TraceConfig().scaled(p.perimeter)["eps_deg"]
    for c in comps:
        for a, b in zip(c.samples, c.samples[1:]):
            assert rect_distance(a.rect, b.rect) <= h_max * (1 + 1e-9)
        for s in c.samples:
            assert graces(p, s)
            assert s.rect.check()
        if c.is_arc:
            for s in (c.samples[0], c.samples[-1]):
                assert min(s.X, s.Y) <= 10 * eps
            ends = (c.samples[0].X <= c.samples[0].Y, c.samples[-1].X <= c.samples[-1].Y)
            assert (c.cls == "Hyperbolic") == (ends[0] != ends[1])
        seq = inscribing_sequence(c, p.n)
        assert len(seq) <= 64 * p.n**4


def test_z4_equivariance(pentagon):
    p, rep, comps = pentagon
    tol = 10 * TraceConfig().scaled(p.perimeter)["h_max"]
    for c in comps:
        moved = shift_component(p, c, 1)
        match = [o for o in comps if o.orbit == c.orbit and o.shift == moved.shift]
        assert match
        other = np.array([s.rect.as_row()[:8] for s in match[0].samples])
        for s in moved.samples[:: max(len(moved.samples) // 10, 1)]:
            row = np.array(s.rect.as_row()[:8])
            assert np.min(np.max(np.abs(other - row), axis=1)) <= tol


def test_shifted_seed_trace_matches_shifted_arc():
    p = corpus(3)[2]
    rep = find_diameters(p)
    seeds = seed_rectangles(p, rep.positive[0])
    base = continue_component(p, seeds[0], NO_ORACLE, rep)
    shifted = continue_component(p, seeds[1], NO_ORACLE, rep)
    moved = shift_component(p, base, 1)
    other = np.array([s.rect.as_row()[:8] for s in shifted.samples])
    h = TraceConfig().scaled(p.perimeter)["h_max"]
    for s in moved.samples:
        row = np.array(s.rect.as_row()[:8])
        assert np.min(np.max(np.abs(other - row), axis=1)) <= h


@pytest.mark.parametrize("idx", [1, 2, 6])
def test_arc_length_second_order(idx):
    p = corpus(idx + 1)[idx]
    rep = find_diameters(p)
    seed = seed_rectangles(p, rep.positive[0])[0]
    lengths = []
    for f in (1, 2, 4):
        cfg = TraceConfig(h0=1e-3 / f, h_max=5e-3 / f, max_turn=0.05 / f, oracle_grid=None)
        lengths.append(continue_component(p, seed, cfg, rep).length)
    d1, d2 = abs(lengths[1] - lengths[0]), abs(lengths[2] - lengths[1])
    assert d1 <= 1e-12 * p.perimeter or d1 / d2 >= 3


def test_repeat_bound():
    comp = trace_all(OBTUSE, NO_ORACLE)[0]
    fake = shift_component(OBTUSE, comp, 0)
    # alternate two quadruples 65 times
    s0, s1 = fake.samples[0], fake.samples[1]
    fake.samples = [s0 if i % 2 else s1.__class__(s1.rect, (0, 1, 2, 0), s1.t, s1.arclen) for i in range(131)]
    with pytest.raises(RepeatBoundViolated):
        inscribing_sequence(fake)


def test_chart_cache_shares_charts():
    cache = ChartCache(OBTUSE)
    assert cache.get((0, 0, 1, 2)) is cache.get((0, 0, 1, 2))
