from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nmslink.errors import InvalidSlope
from nmslink.seifert import (SeifertPiece, Slope, has_forbidden_half_slope,
                             is_fibering_exceptional, normalize_slope, singular_slopes,
                             uniqueness_assumed)


def piece(g, b, *slopes):
    return SeifertPiece("P", g, b, tuple(normalize_slope(q, p) for q, p in slopes))


def test_normalize_reduces_and_moves_sign():
    assert normalize_slope(2, 6) == Slope(1, 3)
    assert normalize_slope(1, -3) == Slope(-1, 3)
    assert normalize_slope(-4, -6) == Slope(2, 3)
    assert normalize_slope(5, 1) == Slope(5, 1)


def test_zero_denominator_rejected():
    with pytest.raises(InvalidSlope):
        normalize_slope(1, 0)


def test_unreduced_slope_rejected():
    with pytest.raises(InvalidSlope):
        Slope(2, 4)


@given(st.integers(-50, 50), st.integers(-50, 50).filter(lambda p: p != 0))
def test_normalize_preserves_value(q, p):
    s = normalize_slope(q, p)
    assert s.p >= 1
    assert s.value() == Fraction(q, p)
    assert normalize_slope(s.q, s.p) == s


def test_singular_iff_denominator_at_least_two():
    assert Slope(1, 3).singular
    assert not Slope(4, 1).singular
    p = piece(0, 2, (1, 3), (2, 1))
    assert singular_slopes(p) == (Slope(1, 3),)
    assert p.m == 1


def test_slopes_are_kept_sorted():
    p = piece(0, 0, (1, 3), (-1, 4), (1, 5))
    assert [str(s) for s in p.slopes] == ["-1/4", "1/5", "1/3"]
    assert str(p) == "M(0,0; -1/4, 1/5, 1/3)"


def test_half_slope_detection():
    assert has_forbidden_half_slope(piece(0, 2, (1, 2)))
    assert not has_forbidden_half_slope(piece(0, 2, (1, 3)))


@pytest.mark.parametrize("g,b,slopes,expected", [
    (0, 1, [], True),                       # solid torus
    (0, 1, [(1, 3)], True),                 # solid torus
    (0, 2, [], True),                       # T^2 x I
    (0, 1, [(1, 2), (1, 2)], True),         # twisted I-bundle over the Klein bottle
    (0, 0, [(1, 3), (1, 4), (1, 5)], True),  # small Seifert space
    (0, 0, [(1, 3), (1, 4), (1, 5), (1, 7)], False),
    (0, 1, [(1, 3), (1, 4)], False),
    (0, 2, [(1, 3)], False),
    (0, 3, [], False),
    (1, 0, [], False),
    (2, 0, [(1, 3)], False),
])
def test_exceptional_fiberings(g, b, slopes, expected):
    assert is_fibering_exceptional(piece(g, b, *slopes)) is expected


def test_uniqueness_assumed_for_small_closed_genus():
    assert uniqueness_assumed(piece(1, 0, (1, 3)))
    assert uniqueness_assumed(piece(0, 0, (1, 3), (1, 3), (1, 3), (1, 3)))
    assert not uniqueness_assumed(piece(2, 0))
    assert not uniqueness_assumed(piece(1, 1))


def test_negative_genus_rejected():
    with pytest.raises(ValueError):
        SeifertPiece("P", -1, 0)
