import numpy as np
import pytest

from periodic_cubics import curve
from periodic_cubics.dynamics import CubicMap, DomainError


def test_phi_examples():
    assert np.allclose(curve.phi_p(1, 2).coeffs, [-1, 1, 1])
    assert np.allclose(curve.phi_p(5, 1).coeffs, [-5, 1])
    assert curve.phi_p(0.3 + 0.1j, 3).degree == 8
    assert [curve.degree(p) for p in (1, 2, 3, 4)] == [1, 2, 8, 24]


def test_phi2_coefficients_random():
    rng = np.random.default_rng(0)
    for a in rng.normal(size=20) + 1j * rng.normal(size=20):
        assert np.allclose(curve.phi_p(a, 2).coeffs, [1 - 2 * a * a, a, 1], atol=1e-12)


def test_fiber_roots():
    roots = sorted(curve.fiber(0, 2).roots, key=lambda z: z.imag)
    assert np.allclose(roots, [-1j, 1j])
    fib = curve.fiber(0.1 + 0.2j, 3)
    assert fib.degree == 8 and fib.min_separation() > 1e-6
    for v in fib.roots:
        assert abs(CubicMap(fib.a, v).iterate(fib.a, 3) - fib.a) < 1e-9
        assert CubicMap(fib.a, v, 3).on_curve()


def test_fiber_far_out_uses_fallback():
    fib = curve.fiber(3.0, 4)
    assert fib.degree == 24
    assert curve.period_residuals(fib.a, fib.roots, 4).max() < 1e-9


def test_branch_points_p2():
    pts = sorted(curve.branch_points(2), key=lambda z: z.real)
    assert np.allclose(pts, [-2 / 3, 2 / 3], atol=1e-12)
    at, away = curve.verify_branch_point(2, pts[1], pts)
    assert at < 1e-4 and away > 1e-2


def test_branch_points_p3_symmetric():
    pts = curve.branch_points(3)
    assert pts
    for z in pts:
        assert min(abs(w + z) for w in pts) < 1e-8


def test_constant_path_is_identity():
    start = curve.fiber(1.3 + 0.1j, 3)
    _, perm = curve.continue_fiber(start, [start.a, start.a])
    assert perm.is_identity()


def test_small_loop_is_transposition():
    start = curve.fiber(0.9, 2)
    loop = curve.loop_around(0.9, 2 / 3, 0.05, [(-2 / 3, 0.05)])
    _, perm = curve.continue_fiber(start, loop)
    assert perm.mapping == (1, 0)


def test_loop_concatenation():
    base = 1.3 + 0.1j
    pts = curve.branch_points(3)
    radii = curve.loop_radii(pts, curve.DEFAULT_TOL.safety_margin)
    start = curve.fiber(base, 3)
    loops = []
    for i in (0, 1):
        others = [(c, r) for j, (c, r) in enumerate(zip(pts, radii)) if j != i]
        loops.append(curve.loop_around(base, pts[i], radii[i], others))
    _, p1 = curve.continue_fiber(start, loops[0])
    _, p2 = curve.continue_fiber(start, loops[1])
    _, both = curve.continue_fiber(start, loops[0] + loops[1][1:])
    assert both == p1.then(p2)


def test_open_path_has_no_permutation():
    start = curve.fiber(1.0, 2)
    end, perm = curve.continue_fiber(start, [1.0, 1.2, 1.2 + 0.3j])
    assert perm is None and end.a == 1.2 + 0.3j
    with pytest.raises(DomainError):
        curve.continue_fiber(start, [2.0, 1.0])


@pytest.mark.parametrize("p", [2, 3])
def test_monodromy_transitive(p):
    res = curve.monodromy_transitive(p)
    assert res.transitive and res.orbit_count == 1 and res.fiber.degree == curve.degree(p)
    assert not res.failed_loops


def test_orbit_count_of_identity():
    ident = curve.MonodromyPerm((0, 1, 2))
    assert curve.orbit_count(3, [ident]) == 3
    assert curve.orbit_count(3, [curve.MonodromyPerm((1, 2, 0))]) == 1
    with pytest.raises(ValueError):
        curve.MonodromyPerm((0, 0))


def test_smoothness():
    assert curve.smoothness_spot_check(2, 100)
    assert curve.smoothness_spot_check(3, 30)
    with pytest.raises(DomainError):
        curve.smoothness_spot_check(1)


def test_monodromy_rejects_unsupported_period():
    with pytest.raises(DomainError):
        curve.monodromy_transitive(5)
