import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest

from periodic_cubics import curve, paramspace as ps
from periodic_cubics.angles import classify
from periodic_cubics.dynamics import CubicMap, DomainError, cocritical_angle
from periodic_cubics.rays import kneading_word


def test_p3_regions(regions_p3):
    words = [r.kneading for r in regions_p3]
    assert words.count("110") == 1
    assert all(r.consistent for r in regions_p3)
    # every end of the curve is accounted for
    assert sum(r.multiplicity_estimate for r in regions_p3) == 8


def test_p2_regions_stable(regions_p2):
    finer = ps.sample_escape_regions(2, 0.5, 16)
    sig = lambda rs: sorted((r.kneading, r.multiplicity_estimate) for r in rs)
    assert sig(regions_p2) == sig(finer) == [("00", 1), ("10", 1)]


def test_region_json(regions_p2):
    d = regions_p2[0].to_json()
    assert d["kneading"] == regions_p2[0].kneading and len(d["samples"]) == len(regions_p2[0].samples)


def test_parameter_ray_contract(regions_p3):
    region = regions_p3[0]
    theta = F(1, 5)
    seed = ps.region_ray_seed(region, theta)
    trace = ps.trace_parameter_ray(3, seed, theta, 1e-3)
    assert trace.complete
    levels = [s for _, s in trace.samples]
    assert all(x > y for x, y in zip(levels, levels[1:]))
    step = max(1, len(trace.samples) // 20)
    for f, _ in trace.samples[::step]:
        assert abs(f.iterate(f.a, 3) - f.a) < 1e-9
        assert abs((cocritical_angle(f) - 1 / 5 + 0.5) % 1.0 - 0.5) < 1e-8
        assert kneading_word(f) == region.kneading


def test_seed_angle_must_match(regions_p2):
    seed = regions_p2[0].samples[0]
    with pytest.raises(DomainError):
        ps.trace_parameter_ray(2, seed, (seed.theta + 0.25) % 1.0, 1e-3)


def _landing(region, theta, floor):
    seed = ps.region_ray_seed(region, theta)
    return ps.landing_estimate(ps.trace_parameter_ray(2, seed, theta, floor), theta)


def test_parabolic_landing(regions_p2):
    region = next(r for r in regions_p2 if r.kneading == "10")
    est = _landing(region, F(1, 24), 1e-140)
    assert est.kind == "parabolic" and est.consistent and est.metric < 1e-3
    half = _landing(region, F(1, 24), 0.5e-140)
    assert abs(est.map.a - half.map.a) + abs(est.map.v - half.map.v) < 1e-4


def test_pcf_landing(regions_p2):
    for region in regions_p2:
        est = _landing(region, F(0), 1e-140)
        assert est.kind == "pcf" and est.consistent and est.metric < 1e-4


def test_classify_examples():
    t = ps.classify_hyperbolic(CubicMap(0, 1j, 2))
    assert (t.tag, t.k) == ("A", 0)
    assert ps.classify_hyperbolic(CubicMap(0.1, 50.0, 2)).tag == "Escape"


def test_center_condition():
    # -a = a_1 = v with f(v) = a forces a^2 = 1/2
    a = 1 / math.sqrt(2)
    f = CubicMap(a, -a, 2)
    t = ps.classify_hyperbolic(f)
    assert t.tag in ("A", "B") and t.k == 1
    assert f.marked_cycle()[t.k] == -f.a
    assert ps.phi_H(f, t.k) == 0


def test_phi_h_grows_along_radial_paths():
    for direction in (0.3, 1.2, 2.5):
        u = cmath.exp(1j * direction)
        v = complex(curve.fiber(0.02 * u, 2).roots[0])
        mags = []
        for r in np.linspace(0.02, 0.6, 30):
            a = r * u
            roots = curve.fiber(a, 2).roots
            v = complex(roots[np.argmin(abs(roots - v))])
            f = CubicMap(a, v, 2)
            t = ps.classify_hyperbolic(f)
            if t.tag != "A":
                break
            mags.append(abs(ps.phi_H(f, 0)))
        assert len(mags) > 3
        assert all(0 < m < 1 for m in mags)
        assert all(x < y for x, y in zip(mags, mags[1:]))
        assert mags[-1] > 0.9


def test_connection_angles():
    for p in (2, 3):
        angles = ps._connection_angles(p)
        assert angles and all(classify(3 * t % 1).period == p for t in angles)
        assert all(classify(3 * t % 1).preperiod == 0 for t in angles)


def test_return_times():
    assert ps.return_times("110") == [3, 2, 1]
    assert max(ps.return_times("0100")) == 2


@pytest.mark.slow
def test_ray_connection_scan_p2(regions_p2):
    for region in regions_p2:
        found = ps.ray_connection_scan(region)
        assert found
        for tp, k, ev in found:
            assert classify(3 * tp % 1).period == 2
            assert ev["boundary_distance"] <= 3 * ev["pixel"]
        witnesses = [ev for _, _, ev in found if ev["witness"]]
        if region.kneading == "10":
            assert not witnesses
        else:
            assert witnesses


@pytest.mark.slow
@pytest.mark.parametrize("word", ["110", "100"])
def test_ray_connection_scan_p3(regions_p3, word):
    region = next(r for r in regions_p3 if r.kneading == word)
    found = ps.ray_connection_scan(region)
    assert all(classify(3 * tp % 1).period == 3 for tp, _, _ in found)
    witnesses = [ev for _, _, ev in found if ev["witness"]]
    if word == "110":
        assert not witnesses
    else:
        assert witnesses
        assert all(ev["a_k_in_D0"] and ev["return_time"] == ev["maximal_return_time"] for ev in witnesses)
