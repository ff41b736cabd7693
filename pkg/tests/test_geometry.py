import math

import pytest
from hypothesis import given, settings, strategies as st

from fracvar.geometry import IntervalSet, PolySet, load_geometry

ivs = st.lists(st.tuples(st.floats(-10, 10), st.floats(0.01, 5)), max_size=5).map(
    lambda xs: IntervalSet(tuple((a, a + l) for a, l in xs)))


def test_canonical_merge():
    E = IntervalSet(((2, 3), (0, 1), (1, 2), (5, 4)))
    assert E.intervals == ((0.0, 3.0),)
    assert E.endpoints == [0.0, 3.0]


@settings(max_examples=80, deadline=None)
@given(ivs, ivs)
def test_measure_additivity(A, B):
    assert A.intersect(B).measure + A.difference(B).measure == pytest.approx(A.measure, abs=1e-9)
    assert A.union(B).measure == pytest.approx(A.measure + B.measure - A.intersect(B).measure, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(ivs)
def test_complement_involution(A):
    assert A.complement().complement() == A


def test_json_exact_and_infinite():
    E = IntervalSet.from_json('{"intervals": [[0.1, 0.3], ["-inf", -5]]}')
    assert E.intervals == ((-math.inf, -5.0), (0.1, 0.3))
    assert IntervalSet.from_json(E.to_json()) == E
    with pytest.raises(ValueError):
        IntervalSet.from_json('[[1, 0]]')


def test_polyset_orientation_and_edges():
    sq = PolySet.from_polygons([[(0, 0), (0, 1), (1, 1), (1, 0)]])  # clockwise input
    e = sq.edges()
    # shoelace over the oriented edges is positive: the set lies on the left
    area = 0.5 * sum(p[0] * q[1] - q[0] * p[1] for p, q in e)
    assert area == pytest.approx(1.0)
    assert sq.perimeter == pytest.approx(4.0)


def test_polyset_hole_and_invalid():
    ring = PolySet.from_polygons([[(0, 0), (3, 0), (3, 3), (0, 3)]], [[[(1, 1), (2, 1), (2, 2), (1, 2)]]])
    assert ring.area == pytest.approx(8.0)
    assert ring.perimeter == pytest.approx(16.0)
    with pytest.raises(ValueError):
        PolySet.from_polygons([[(0, 0), (1, 1), (1, 0), (0, 1)]])


def test_load_geometry_dispatch():
    assert isinstance(load_geometry('{"intervals": [[0, 1]]}'), IntervalSet)
    P = load_geometry('{"polygons": [{"shell": [[0,0],[1,0],[0,1]]}]}')
    assert isinstance(P, PolySet) and P.area == pytest.approx(0.5)
