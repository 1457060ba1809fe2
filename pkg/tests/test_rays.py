import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest

from periodic_cubics.dynamics import CubicMap, DomainError, green_value
from periodic_cubics.rays import (fixed_and_prefixed, itinerary_word, kneading_word, ray_landing,
                                  separation_curve, side_of, trace_ray)


def test_cube_rays_are_radial():
    ray = trace_ray(CubicMap(0, 0), F(1, 8), 0.01)
    for z, _ in ray.points:
        assert abs(cmath.phase(z) - math.pi / 4) * abs(z) < 1e-9
    assert ray.terminated_at == "green_floor"


def test_green_decreases_along_rays():
    f = CubicMap(0.3 + 0.2j, 1.1 - 0.4j)
    for t in (F(0), F(1, 5), F(2, 3)):
        g = trace_ray(f, t, 1e-3).levels
        assert np.all(np.diff(g) < 0)


def test_ray_csv_round_trip():
    ray = trace_ray(CubicMap(0, 0), F(1, 4), 0.1)
    lines = ray.to_csv().split("\r\n")
    assert lines[0] == "re,im,green"
    assert len([x for x in lines[1:] if x]) == len(ray.points)


def test_period_two_ray_lands_on_period_two_point(regions_p2):
    f = regions_p2[0].samples[0].map
    ray = ray_landing(f, F(1, 8), 1e-6)
    assert ray.landing is not None
    # period-2 points solve f(f(z)) = z; expand with numpy independently of the tracer
    a, v = f.a, f.v
    cubic = np.poly1d([1, 0, -3 * a * a, 2 * a**3 + v])
    roots = (cubic(cubic) - np.poly1d([1, 0])).roots
    assert min(abs(roots - ray.landing)) < 1e-6


@pytest.fixture(scope="module")
def s3_map(regions_p3):
    return regions_p3[0].samples[0].map


@pytest.fixture(scope="module")
def s3_sep(s3_map):
    return separation_curve(s3_map)


def test_separation_curve(s3_map, s3_sep):
    f = s3_map
    ends = [s3_sep.left.points[-1][0], s3_sep.right.points[-1][0]]
    assert all(abs(z + f.a) < 1e-6 for z in ends)
    gap = (float(s3_sep.left.angle) - float(s3_sep.right.angle)) % 1.0
    assert min(abs(gap - 2 / 3), abs(gap - 1 / 3)) < 1e-12
    assert abs(s3_sep.green_critical - green_value(f, -f.a)) < 1e-8


def test_sides(s3_map, s3_sep):
    f = s3_map
    assert side_of(f, s3_sep, f.a) == 0
    z_fix, z1, z2 = fixed_and_prefixed(f, s3_sep)
    assert side_of(f, s3_sep, z_fix) == 1
    assert abs(f(z1) - z_fix) < 1e-10 and abs(f(z2) - z_fix) < 1e-10
    fixed = np.roots([1, 0, -3 * f.a**2 - 1, 2 * f.a**3 + f.v])
    assert len(fixed) == 3
    assert sum(side_of(f, s3_sep, z) for z in fixed) == 1
    with pytest.raises(DomainError):
        side_of(f, s3_sep, 100.0)


def test_kneading_on_escape_locus(regions_p3):
    for region in regions_p3:
        for smp in region.samples[:2]:
            word = kneading_word(smp.map)
            assert word == region.kneading and word[-1] == "0"


def test_itinerary_word(s3_map, s3_sep):
    f = s3_map
    word = kneading_word(f, s3_sep)
    # rotated so that the word starts at a = a_0
    assert itinerary_word(f, f.a, 3, s3_sep) == word[-1] + word[:-1]
    assert itinerary_word(f, 50.0, 3, s3_sep) is None
