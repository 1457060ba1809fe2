import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodic_cubics.dynamics import (CubicMap, DomainError, boettcher_external, cocritical_angle,
                                      evaluate, external_angle_float, green, local_boettcher_cycle)

coords = st.floats(-1.0, 1.0, allow_nan=False)


def circle_dist(x, y):
    return abs((x - y + 0.5) % 1.0 - 0.5)


@pytest.mark.parametrize("a, v, z, want", [(0, 0, 2, 8), (1 + 1j, 2, 1 + 1j, 2), (1, 0, 2, 4)])
def test_evaluate(a, v, z, want):
    assert evaluate(CubicMap(a, v), z) == want


def test_green_of_cube():
    f = CubicMap(0, 0)
    assert abs(green(f, math.e).green - 1.0) < 1e-9
    res = green(f, 0.5)
    assert not res.escaped and res.green == 0


@settings(max_examples=50, deadline=None)
@given(coords, coords, coords, coords, st.floats(1.0, 6.0))
def test_green_functional_equation(ar, ai, vr, vi, r):
    f = CubicMap(complex(ar, ai), complex(vr, vi))
    z = r * cmath.exp(1j * (ar + vi))
    g0 = green(f, z)
    if not g0.escaped or g0.green < 1e-6:
        return
    assert abs(green(f, f(z)).green - 3 * g0.green) < 1e-9 * max(1.0, g0.green)


def test_boettcher_identity_for_cube():
    assert abs(boettcher_external(CubicMap(0, 0), 2 + 0j) - 2) < 1e-12


@settings(max_examples=40, deadline=None)
@given(coords, coords, coords, coords, st.floats(0.0, 2 * math.pi))
def test_boettcher_functional_equation(ar, ai, vr, vi, phase):
    f = CubicMap(complex(ar, ai), complex(vr, vi))
    z = 6.0 * cmath.exp(1j * phase)
    gc = green(f, -f.a).green
    if green(f, z).green <= 1.01 * gc:
        return
    lhs = boettcher_external(f, f(z))
    rhs = boettcher_external(f, z) ** 3
    assert abs(lhs - rhs) <= 1e-9 * abs(rhs)


def test_boettcher_asymptotic_to_identity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, v = (complex(*rng.uniform(-0.7, 0.7, 2)) for _ in range(2))
        z = 1e4 * cmath.exp(2j * math.pi * rng.uniform())
        assert abs(boettcher_external(CubicMap(a, v), z) / z - 1) < 1e-2


def test_boettcher_needs_escape_above_critical_level():
    with pytest.raises(DomainError):
        boettcher_external(CubicMap(0, 0), 0.5)


def test_cocritical_identity():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, v = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        f = CubicMap(a, v)
        assert f(2 * a) == pytest.approx(f(-a), abs=1e-12 * (1 + abs(a) ** 3 + abs(v)))


def _series_angle(a, v, z, digits=200, terms=80):
    """Angle of phi(z) by the Boettcher product with principal branches,
    valid when every orbit point is far from the critical points."""
    with mpmath.workdps(digits):
        a, v, z = mpmath.mpc(a), mpmath.mpc(v), mpmath.mpc(z)
        total = mpmath.arg(z)
        for n in range(terms):
            w = (z - a) ** 2 * (z + 2 * a) + v
            total += mpmath.arg(w / z**3) / mpmath.mpf(3) ** (n + 1)
            z = w
        return float((total / (2 * mpmath.pi)) % 1)


@pytest.mark.parametrize("a, v", [(0.3 + 0.1j, 2.0 - 1.0j), (-0.2j, 1.5 + 1.5j), (0.5, -2.5 + 0.3j)])
def test_cocritical_angle_triples_to_critical_value_angle(a, v):
    f = CubicMap(a, v)
    theta = cocritical_angle(f)
    z1 = f(2 * f.a)
    independent = _series_angle(a, v, z1)
    assert circle_dist(3 * theta % 1.0, independent) < 1e-8
    assert circle_dist(external_angle_float(f, z1), independent) < 1e-8


def test_cocritical_angle_against_high_precision():
    # a real map: the real axis beyond 2a is the ray of angle 0
    f = CubicMap(0.01, 2.0)
    theta = cocritical_angle(f)
    oracle = _series_angle(0.01, 2.0, f(2 * f.a)) / 3.0
    assert circle_dist(theta, oracle) < 1e-8
    assert circle_dist(theta, 0.0) < 1e-8


def _on_s2(a, sheet=0):
    from periodic_cubics.curve import fiber
    return CubicMap(a, complex(fiber(a, 2).roots[sheet]), 2)


def test_local_boettcher_degenerate_cycle():
    with pytest.raises(DomainError):
        local_boettcher_cycle(CubicMap(0, 1j, 2), 0, 0.1)


@pytest.mark.parametrize("k", [0, 1])
def test_local_boettcher_functional_equation(k):
    f = _on_s2(0.05)
    ak = f.marked_cycle()[k]
    assert local_boettcher_cycle(f, k, ak) == 0
    rng = np.random.default_rng(3 + k)
    for _ in range(8):
        z = ak + 0.05 * complex(*rng.uniform(-1, 1, 2))
        phi = local_boettcher_cycle(f, k, z)
        phi2 = local_boettcher_cycle(f, k, f(f(z)))
        assert 0 < abs(phi) < 1
        assert abs(abs(phi2) - abs(phi) ** 2) < 1e-8
        assert abs(phi2 - phi**2) < 1e-8
