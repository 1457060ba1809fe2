from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from periodic_cubics.angles import (ThetaPartition, alpha_beta, angle, classify, cyclic_member,
                                    format_angle, in_zero_interval, is_periodic, itinerary,
                                    negate_arc, orbit, rationals_in, triple)

fractions = st.builds(F, st.integers(0, 10**6), st.integers(1, 10**4))


@pytest.mark.parametrize("t, want", [(F(1, 8), F(3, 8)), (F(19, 30), F(9, 10)), (F(2, 3), F(0))])
def test_triple(t, want):
    assert triple(t) == want


def test_angle_coercion():
    assert angle("7/6") == F(1, 6)
    assert angle((-1, 3)) == F(2, 3)
    assert angle(2) == 0
    assert format_angle(F(5, 4)) == "1/4"


@pytest.mark.parametrize("t, pre, per", [(F(1, 8), 0, 2), (F(1, 3), 1, 1), (F(1, 26), 0, 3),
                                         (F(0), 0, 1), (F(1, 24), 1, 2)])
def test_classify(t, pre, per):
    c = classify(t)
    assert (c.preperiod, c.period) == (pre, per)


@given(fractions)
def test_classify_matches_orbit(t):
    t = angle(t)
    c = classify(t)
    pts = orbit(t, c.preperiod + 2 * c.period + 1)
    assert pts[c.preperiod] == pts[c.preperiod + c.period]
    assert is_periodic(t) == (c.preperiod == 0)
    # the preperiod is minimal
    if c.preperiod:
        assert pts[c.preperiod - 1] != pts[c.preperiod - 1 + c.period]


def test_alpha_beta():
    assert alpha_beta(2) == (F(5, 24), F(7, 24))
    assert alpha_beta(3) == (F(23, 78), F(25, 78))
    with pytest.raises(ValueError):
        alpha_beta(1)


@pytest.mark.parametrize("theta, t, side, n, want", [
    (F(3, 10), F(19, 30), "minus", 4, "0110"),
    (F(3, 10), F(29, 30), "plus", 4, "0110"),
    (F(1, 4), F(0), "plus", 4, "0000"),
])
def test_itinerary(theta, t, side, n, want):
    assert itinerary(theta, t, side, n) == want


@given(fractions, fractions, st.sampled_from(["plus", "minus"]))
def test_itinerary_matches_partition(theta, t, side):
    part = ThetaPartition(angle(theta), side)
    want = "".join(str(part.symbol(x)) for x in orbit(t, 5))
    assert itinerary(theta, t, side, 5) == want


def test_itinerary_rejects_bad_input():
    with pytest.raises(ValueError):
        itinerary(F(0), F(0), "up", 3)
    with pytest.raises(ValueError):
        itinerary(F(0), F(0), "plus", 0)


def test_zero_interval_endpoints():
    th = F(1, 4)
    assert in_zero_interval(th, th - F(1, 3), "plus")
    assert not in_zero_interval(th, th + F(1, 3), "plus")
    assert in_zero_interval(th, th + F(1, 3), "minus")
    assert not in_zero_interval(th, th - F(1, 3), "minus")


@pytest.mark.parametrize("x, a, b, kind, want", [
    (F(1, 2), F(1, 3), F(2, 3), "closed-open", True),
    (F(1, 10), F(2, 3), F(1, 3), "open-open", True),
    (F(1, 2), F(2, 3), F(1, 3), "open-open", False),
    (F(1, 3), F(1, 3), F(2, 3), "open-open", False),
    (F(2, 3), F(1, 3), F(2, 3), "open-closed", True),
])
def test_cyclic_member(x, a, b, kind, want):
    assert cyclic_member(x, a, b, kind) is want


def test_rationals_and_negation():
    assert rationals_in(F(1, 5), F(1, 3), 6) == [F(1, 4)]
    # the arc wraps through 0
    assert rationals_in(F(5, 6), F(1, 6), 6) == [F(0)]
    assert negate_arc(F(5, 24), F(7, 24)) == (F(17, 24), F(19, 24))
