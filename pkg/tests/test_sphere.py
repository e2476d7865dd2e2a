import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from famdyn.sphere import (
    INF, OVERFLOW, ExtendedComplex, antipode, chordal_ball, chordal_distance, format_point,
    parse_point, spherical_derivative,
)

from oracles import chordal

finite = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)
points = st.one_of(finite, st.just(INF))


@pytest.mark.parametrize("a,b,expected", [(0, 0, 0.0), (0, INF, 2.0), (1, -1, 2.0), (INF, INF, 0.0)])
def test_chordal_examples(a, b, expected):
    assert chordal_distance(a, b) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("f,z,bindings,expected", [
    ("z", 0, None, 1.0),
    ("n*z", 0, {"n": 5}, 5.0),
    ("1/z", 0, None, 1.0),
])
def test_spherical_derivative_examples(f, z, bindings, expected):
    assert spherical_derivative(f, z, bindings) == pytest.approx(expected, rel=1e-12)


def test_metric_axioms_random_triples():
    rng = np.random.default_rng(1)
    n = 10_000
    scale = 10.0 ** rng.uniform(-3, 3, size=(3, n))
    p = scale * np.exp(2j * np.pi * rng.random((3, n)))
    p[0, ::97] = INF
    a, b, c = p
    dab, dba = chordal_distance(a, b), chordal_distance(b, a)
    assert np.array_equal(dab, dba)
    assert np.all(dab <= chordal_distance(a, c) + chordal_distance(c, b) + 1e-12)
    assert np.all((dab >= 0) & (dab <= 2))
    oracle = np.array([chordal(x, y) for x, y in zip(a[:500], b[:500])])
    assert np.allclose(dab[:500], oracle, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(points, points)
def test_symmetry_and_range(a, b):
    d = chordal_distance(a, b)
    assert d == chordal_distance(b, a)
    assert 0.0 <= d <= 2.0


@settings(max_examples=200, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_antipodal_pairs_at_distance_two(a):
    assert chordal_distance(a, antipode(a)) == pytest.approx(2.0, abs=1e-12)


def test_antipode_of_zero_and_infinity():
    assert antipode(0) == INF
    assert antipode(INF) == 0


def test_reciprocal_invariance_of_spherical_derivative():
    rng = np.random.default_rng(2)
    zs = 3 * (rng.standard_normal(1000) + 1j * rng.standard_normal(1000))
    for f, g in [("z^2+1", "1/(z^2+1)"), ("(z-1)/(z^3+2)", "(z^3+2)/(z-1)")]:
        for z in zs[:1000:5]:
            assert abs(spherical_derivative(f, z) - spherical_derivative(g, z)) < 1e-9


def test_overflow_maps_to_infinity():
    assert ExtendedComplex(2 * OVERFLOW, 0).infinite
    assert not ExtendedComplex(OVERFLOW / 2, 0).infinite
    assert chordal_distance(1e200, INF) == 0.0
    with pytest.raises(ValueError):
        ExtendedComplex(math.nan, 0)


@settings(max_examples=200, deadline=None)
@given(points)
def test_format_parse_round_trip(z):
    p = parse_point(format_point(z))
    assert p == ExtendedComplex.of(z)


@pytest.mark.parametrize("text,value", [("2", 2), ("-1.5i", -1.5j), ("0.5+0i", 0.5), ("inf", INF)])
def test_parse_point(text, value):
    assert parse_point(text).value == value


@pytest.mark.parametrize("bad", ["", "1+2j", "nan", "abc"])
def test_parse_point_rejects(bad):
    with pytest.raises(ValueError):
        parse_point(bad)


@settings(max_examples=200, deadline=None)
@given(points, st.floats(min_value=1e-3, max_value=1.9), finite)
def test_chordal_ball_matches_metric(w, eps, v):
    ball = chordal_ball(w, eps)
    d = chordal_distance(w, v)
    if abs(d - eps) > 1e-9:
        assert bool(ball.contains(v)) == (d < eps)
