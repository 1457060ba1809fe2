"""The period-p curve as an algebraic family over the a-line.

``Phi_p(a, v)`` is f^p(a) - a with the lower-period factors divided out; it is
monic in v of degree 1, 2, 8, 24 for p = 1..4.  The exact polynomial lives in
Z[a, v] (built once with sympy); fibers, continuation and monodromy work in
double precision on top of it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import mpmath
import numpy as np
import sympy as sp
from scipy.cluster.hierarchy import DisjointSet

from .dynamics import DomainError, NumericalError, Tolerances, CubicMap

SUPPORTED_P = (2, 3, 4)

_A, _V = sp.symbols("a v")


@dataclass(frozen=True)
class CurveTolerances:
    deflate_tol: float = 1e-10
    fiber_tol: float = 1e-9
    collision_tol: float = 1e-9
    safety_margin: float = 0.05
    smooth_tol: float = 1e-8
    exactness_floor: float = 1e-6
    mp_digits: int = 50


DEFAULT_TOL = CurveTolerances()


# --- exact construction --------------------------------------------------------


def _divisors(p: int) -> list[int]:
    return [d for d in range(1, p) if p % d == 0]


@lru_cache(maxsize=None)
def _full_poly(p: int) -> sp.Poly:
    """f^p(a) - a in Z[v, a]."""
    a = sp.Poly(_A, _V, _A)
    v = sp.Poly(_V, _V, _A)
    w = a
    for _ in range(p):
        w = (w - a) ** 2 * (w + 2 * a) + v
    return w - a


@lru_cache(maxsize=None)
def phi_exact(p: int) -> sp.Poly:
    """Phi_p in Z[v, a], by exact division of f^p(a) - a by Phi_d, d | p, d < p."""
    if p < 1:
        raise DomainError("p must be at least 1")
    poly = _full_poly(p)
    for d in _divisors(p):
        poly, rem = sp.div(poly, phi_exact(d))
        if not rem.is_zero:
            raise ArithmeticError(f"Phi_{d} does not divide f^{p}(a) - a")
    return poly


def _coeff_table(poly: sp.Poly) -> list[list[int]]:
    """table[j][i] = coefficient of v^j a^i."""
    dv, da = poly.degree(_V), poly.degree(_A)
    table = [[0] * (da + 1) for _ in range(dv + 1)]
    for (j, i), c in poly.terms():
        table[j][i] = int(c)
    return table


@lru_cache(maxsize=None)
def _tables(p: int) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Float coefficient matrices of Phi_p and of d Phi_p / da, plus the exact table."""
    exact = _coeff_table(phi_exact(p))
    mat = np.array(exact, dtype=float)
    da = mat[:, 1:] * np.arange(1, mat.shape[1])
    return mat, da, tuple(tuple(row) for row in exact)


def degree(p: int) -> int:
    return phi_exact(p).degree(_V)


@lru_cache(maxsize=None)
def discriminant(p: int) -> sp.Poly:
    """Discriminant of Phi_p in v, an integer polynomial in a."""
    return sp.Poly(sp.discriminant(phi_exact(p).as_expr(), _V), _A)


# --- fibers ------------------------------------------------------------------------


def _horner(coeffs_desc: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Value and derivative of a polynomial (descending coefficients) at x."""
    val = np.zeros_like(x) + coeffs_desc[0]
    der = np.zeros_like(x)
    for c in coeffs_desc[1:]:
        der = der * x + val
        val = val * x + c
    return val, der


@dataclass(frozen=True)
class FiberPolynomial:
    """Phi_p(a, .) as a polynomial in v; ``coeffs`` ascend in degree."""

    a: complex
    p: int
    coeffs: np.ndarray
    degree: int
    residual: float = 0.0

    def __call__(self, v):
        return np.polyval(self.coeffs[::-1], v)

    def value_and_derivative(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _horner(self.coeffs[::-1], np.asarray(v, dtype=complex))

    def scale(self, v) -> np.ndarray:
        """Magnitude bound sum |c_j| |v|^j used for relative residuals."""
        return np.polyval(np.abs(self.coeffs[::-1]), np.abs(v))


def _eval_coeffs_float(p: int, a: complex) -> np.ndarray:
    mat = _tables(p)[0]
    powers = a ** np.arange(mat.shape[1])
    return mat @ powers


def _eval_coeffs_mp(p: int, a: complex, digits: int) -> np.ndarray:
    exact = _tables(p)[2]
    with mpmath.workdps(digits):
        am = mpmath.mpc(a)
        out = [mpmath.polyval(list(reversed(row)), am) for row in exact]
        return np.array([complex(c) for c in out])


def _deflation_residual(p: int, a: complex, coeffs: np.ndarray) -> float:
    """Relative mismatch of Phi_p * prod Phi_d against f^p(a) - a at test points."""
    worst = 0.0
    lower = [_eval_coeffs_float(d, a) for d in _divisors(p)]
    radius = 1.0 + float(np.max(np.abs(coeffs))) ** (1.0 / max(len(coeffs) - 1, 1))
    for k in range(3):
        v = radius * cmath.exp(2j * math.pi * (k + 0.25) / 3)
        lhs = np.polyval(coeffs[::-1], v)
        scale = np.polyval(np.abs(coeffs[::-1]), abs(v))
        for c in lower:
            lhs *= np.polyval(c[::-1], v)
            scale *= np.polyval(np.abs(c[::-1]), abs(v))
        f = CubicMap(a, v)
        rhs = f.iterate(a, p) - a
        worst = max(worst, abs(lhs - rhs) / max(scale, 1.0))
    return worst


def phi_p(a: complex, p: int, tol: CurveTolerances = DEFAULT_TOL) -> FiberPolynomial:
    """Coefficients of Phi_p(a, .) in v, ascending.

    Evaluated in double precision first; if the deflation residual is too large
    the exact integer coefficients are evaluated again with ``tol.mp_digits``
    digits.
    """
    if p < 1:
        raise DomainError("p must be at least 1")
    a = complex(a)
    coeffs = _eval_coeffs_float(p, a)
    res = _deflation_residual(p, a, coeffs)
    if res > tol.deflate_tol:
        coeffs = _eval_coeffs_mp(p, a, tol.mp_digits)
        res = _deflation_residual(p, a, coeffs)
        if res > tol.deflate_tol:
            raise NumericalError(f"deflation residual {res:.3g} above tolerance at a={a}")
    return FiberPolynomial(a, p, coeffs, len(coeffs) - 1, res)


@dataclass(frozen=True)
class Fiber:
    a: complex
    p: int
    roots: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.roots)

    def min_separation(self) -> float:
        return min_separation(self.roots)


def min_separation(roots: np.ndarray) -> float:
    if len(roots) < 2:
        return math.inf
    d = np.abs(roots[:, None] - roots[None, :])
    d[np.diag_indices(len(roots))] = np.inf
    return float(d.min())


def _polish(fp: FiberPolynomial, v: np.ndarray, iters: int = 8) -> np.ndarray:
    v = np.array(v, dtype=complex)
    for _ in range(iters):
        val, der = fp.value_and_derivative(v)
        safe = der != 0
        step = np.zeros_like(v)
        step[safe] = val[safe] / der[safe]
        v = v - step
        if np.all(np.abs(step) <= 1e-15 * (1 + np.abs(v))):
            break
    return v


def _orbit_value_and_dv(a: complex, v: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """f^p(a) - a and its v-derivative, vectorized over v."""
    z = np.array(v, dtype=complex)
    dz = np.ones_like(z)
    for _ in range(p - 1):
        dz = 3 * (z * z - a * a) * dz + 1
        z = (z - a) ** 2 * (z + 2 * a) + v
    return z - a, dz


def period_residuals(a: complex, roots: Sequence[complex], p: int) -> np.ndarray:
    """Newton distance |F / F_v| / (1 + |v|) to the nearest solution of
    F(v) = f^p(a) - a = 0, per root.  This is the error in v itself, which
    stays meaningful when f^p(a) is very sensitive to v."""
    v = np.asarray(roots, dtype=complex)
    val, der = _orbit_value_and_dv(a, v, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(val / der) / (1.0 + np.abs(v))


def raw_period_residuals(a: complex, roots: Sequence[complex], p: int) -> np.ndarray:
    """|f^p(a) - a| for each root."""
    return np.abs(_orbit_value_and_dv(a, np.asarray(roots, dtype=complex), p)[0])


def _fiber_residuals(a: complex, roots: np.ndarray, p: int) -> np.ndarray:
    # the Newton distance blows up at a double root, where |f^p(a) - a| is
    # the meaningful measure; a root passes if either is small
    with np.errstate(invalid="ignore"):
        return np.fmin(period_residuals(a, roots, p), raw_period_residuals(a, roots, p))


def _polish_orbit(a: complex, v: np.ndarray, p: int, iters: int = 4) -> np.ndarray:
    for _ in range(iters):
        val, der = _orbit_value_and_dv(a, v, p)
        step = np.where(der != 0, val / np.where(der != 0, der, 1), 0)
        v = v - step
    return v


def _mp_roots(a: complex, p: int, digits: int) -> np.ndarray:
    """Roots of Phi_p(a, .) from the exact coefficients in multiprecision."""
    with mpmath.workdps(digits):
        am = mpmath.mpc(a)
        coeffs = [mpmath.polyval(list(reversed(row)), am) for row in _tables(p)[2]]
        roots = mpmath.polyroots(list(reversed(coeffs)), maxsteps=200, extraprec=2 * digits)
    return np.array([complex(r) for r in roots])


def fiber_roots(fp: FiberPolynomial, tol: CurveTolerances = DEFAULT_TOL, check_exact: bool = True) -> Fiber:
    """All roots of Phi_p(a, .), from companion-matrix eigenvalues polished by Newton."""
    if fp.degree < 1:
        raise DomainError("fiber polynomial has degree 0")
    roots = np.roots(fp.coeffs[::-1])
    if len(roots) != fp.degree:
        raise NumericalError("root finder lost roots")
    roots = _polish_orbit(fp.a, _polish(fp, roots), fp.p)
    res = _fiber_residuals(fp.a, roots, fp.p)
    if np.any(~np.isfinite(res)) or res.max() > tol.fiber_tol:
        # clustered roots: double-precision coefficients cannot separate them
        roots = _polish_orbit(fp.a, _mp_roots(fp.a, fp.p, tol.mp_digits), fp.p, iters=2)
        res = _fiber_residuals(fp.a, roots, fp.p)
    if np.any(~np.isfinite(res)) or res.max() > tol.fiber_tol:
        raise NumericalError(f"fiber root residual {res.max():.3g} above {tol.fiber_tol}")
    if check_exact:
        for d in _divisors(fp.p):
            for v in roots:
                f = CubicMap(fp.a, v)
                if abs(f.iterate(fp.a, d) - fp.a) <= tol.exactness_floor:
                    raise NumericalError(f"root v={v} has period dividing {d}")
    order = np.lexsort((roots.imag, roots.real))
    return Fiber(fp.a, fp.p, roots[order])


def fiber(a: complex, p: int, tol: CurveTolerances = DEFAULT_TOL) -> Fiber:
    return fiber_roots(phi_p(a, p, tol), tol)


# --- branch points ---------------------------------------------------------------------


def branch_points(p: int, center: complex = 0.0, radius: float = 2.0, digits: int = 40) -> list[complex]:
    """Values of a in the disk where Phi_p(a, .) has a repeated root.

    These are the roots of the exact discriminant, found with extended precision.
    """
    if p not in SUPPORTED_P:
        raise DomainError(f"branch points supported for p in {SUPPORTED_P}")
    disc = discriminant(p)
    coeffs = [int(c) for c in disc.all_coeffs()]
    with mpmath.workdps(digits):
        roots = mpmath.polyroots(coeffs, maxsteps=400, extraprec=4 * digits)
        pts = [complex(r) for r in roots]
    pts = [z for z in pts if abs(z - center) <= radius]
    return sorted(pts, key=lambda z: (round(z.real, 12), z.imag))


def verify_branch_point(p: int, a_star: complex, others: Sequence[complex] = (), away: float = 0.1) -> tuple[float, float]:
    """(min root distance at a_star, best min root distance at distance ``away``)."""
    at = fiber_roots(phi_p(a_star, p), check_exact=False).min_separation()
    best = 0.0
    for k in range(8):
        b = a_star + away * cmath.exp(2j * math.pi * k / 8)
        if any(abs(b - c) < away / 2 for c in others):
            continue
        best = max(best, fiber_roots(phi_p(b, p), check_exact=False).min_separation())
    return at, best


# --- continuation and monodromy ---------------------------------------------------------


@dataclass(frozen=True)
class MonodromyPerm:
    """``mapping[i]`` is the start index of the root reached from root i."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError("not a permutation")

    def then(self, other: "MonodromyPerm") -> "MonodromyPerm":
        """Permutation of the loop ``self`` followed by ``other``."""
        return MonodromyPerm(tuple(other.mapping[i] for i in self.mapping))

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.mapping))

    def cycles(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for i in range(len(self.mapping)):
            if i in seen:
                continue
            cyc = [i]
            seen.add(i)
            j = self.mapping[i]
            while j != i:
                cyc.append(j)
                seen.add(j)
                j = self.mapping[j]
            out.append(tuple(cyc))
        return out


@dataclass(frozen=True)
class ContinuationConfig:
    initial_step: float = 0.02
    min_step: float = 1e-9
    max_step: float = 0.05
    newton_iters: int = 12
    max_steps: int = 200_000


def _correct(p: int, a: complex, guess: np.ndarray, iters: int) -> Optional[np.ndarray]:
    """Newton on Phi_p = (f^p(a) - a) / prod Phi_d from the predicted roots.

    f^p(a) - a comes from the orbit recursion, which is better conditioned
    than the expanded degree-3^(p-1) coefficients; the lower-period factors
    have small degree and are divided out through the log-derivative.
    """
    lower = [_eval_coeffs_float(d, a)[::-1] for d in _divisors(p)]
    v = guess.copy()
    for _ in range(iters):
        val, der = _orbit_value_and_dv(a, v, p)
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = der / val
            for c in lower:
                lv, ld = _horner(c, v)
                logd = logd - ld / lv
            step = 1.0 / logd
        if not np.all(np.isfinite(step)):
            # exactly on a root already
            step = np.where(val == 0, 0, step)
            if not np.all(np.isfinite(step)):
                return None
        v = v - step
        if np.all(np.abs(step) <= 1e-13 * (1 + np.abs(v))):
            return v
    return None


def _track_segment(p: int, a0: complex, a1: complex, roots: np.ndarray, cfg: ContinuationConfig,
                   tol: CurveTolerances, counter: list[int]) -> np.ndarray:
    length = abs(a1 - a0)
    if length == 0:
        return roots
    s, h = 0.0, min(cfg.initial_step, cfg.max_step) / length
    velocity = None
    while s < 1.0:
        h = min(h, 1.0 - s)
        a_new = a0 + (s + h) * (a1 - a0)
        pred = roots if velocity is None else roots + velocity * h
        new = _correct(p, a_new, pred, cfg.newton_iters)
        ok = new is not None
        if ok:
            # each root must stay well inside its own basin
            sep = np.abs(roots[:, None] - roots[None, :])
            np.fill_diagonal(sep, np.inf)
            near = sep.min(axis=1)
            ok = bool(np.all(np.abs(new - pred) < 0.2 * near) and np.all(np.abs(new - roots) < 0.4 * near))
            ok = ok and min_separation(new) > tol.collision_tol
        if ok:
            velocity = (new - roots) / h
            roots = new
            s += h
            h *= 1.5
            h = min(h, cfg.max_step / length)
        else:
            h *= 0.5
            velocity = None
            if h * length < cfg.min_step:
                raise NumericalError(f"continuation stalled near a={a_new}: path too close to a branch point")
        counter[0] += 1
        if counter[0] > cfg.max_steps:
            raise NumericalError("continuation step budget exhausted")
    return roots


def continue_fiber(start: Fiber, path: Sequence[complex], cfg: ContinuationConfig = ContinuationConfig(),
                   tol: CurveTolerances = DEFAULT_TOL) -> tuple[Fiber, Optional[MonodromyPerm]]:
    """Track every root of ``start`` along the polygonal a-path.

    For a closed path the second value maps each start index to the start
    index of its endpoint; for an open path it is None.
    """
    path = [complex(z) for z in path]
    if not path or abs(path[0] - start.a) > 1e-12 * (1 + abs(start.a)):
        raise DomainError("path must start at the fiber's base value of a")
    roots = np.array(start.roots, dtype=complex)
    counter = [0]
    for a0, a1 in zip(path[:-1], path[1:]):
        roots = _track_segment(start.p, a0, a1, roots, cfg, tol, counter)
    end = Fiber(path[-1], start.p, roots)
    if abs(path[-1] - path[0]) > 1e-12 * (1 + abs(path[0])):
        return end, None
    dist = np.abs(roots[:, None] - start.roots[None, :])
    mapping = tuple(int(j) for j in dist.argmin(axis=1))
    if sorted(mapping) != list(range(len(mapping))):
        raise NumericalError("loop endpoints do not match the start fiber")
    if dist.min(axis=1).max() > 0.1 * start.min_separation():
        raise NumericalError("loop endpoint drifted from the start fiber")
    return end, MonodromyPerm(mapping)


def _segment_distance(z: complex, p0: complex, p1: complex) -> tuple[float, float]:
    d = p1 - p0
    t = 0.0 if d == 0 else max(0.0, min(1.0, ((z - p0) * d.conjugate()).real / abs(d) ** 2))
    return abs(p0 + t * d - z), t


def _avoiding_path(p0: complex, p1: complex, obstacles: Sequence[tuple[complex, float]], depth: int = 0) -> list[complex]:
    """Polyline from p0 to p1 keeping each obstacle centre outside its radius."""
    worst = None
    for c, r in obstacles:
        dist, t = _segment_distance(c, p0, p1)
        if dist < r and 0.0 < t < 1.0 and (worst is None or dist < worst[0]):
            worst = (dist, c, r)
    if worst is None or depth > 12:
        return [p0, p1]
    _, c, r = worst
    d = (p1 - p0) / abs(p1 - p0)
    normal = d * 1j
    side = 1.0 if ((c - p0) * normal.conjugate()).real <= 0 else -1.0
    # go around the obstacle on the side away from it
    waypoint = c + side * normal * 2.0 * r
    left = _avoiding_path(p0, waypoint, obstacles, depth + 1)
    right = _avoiding_path(waypoint, p1, obstacles, depth + 1)
    return left[:-1] + right


def loop_around(basepoint: complex, centre: complex, radius: float, others: Sequence[tuple[complex, float]],
                vertices: int = 24) -> list[complex]:
    """Basepoint -> circle of ``radius`` about ``centre`` (counter-clockwise) -> back."""
    u = (basepoint - centre) / abs(basepoint - centre)
    entry = centre + radius * u
    spoke = _avoiding_path(basepoint, entry, others)
    start_angle = cmath.phase(u)
    circle = [centre + radius * cmath.exp(1j * (start_angle + 2 * math.pi * k / vertices)) for k in range(1, vertices + 1)]
    circle[-1] = entry
    return spoke + circle + spoke[::-1][1:]


@dataclass
class MonodromyResult:
    p: int
    transitive: bool
    orbit_count: int
    generators: list[MonodromyPerm]
    branch_points: list[complex]
    basepoint: complex
    fiber: Fiber
    failed_loops: list[int] = field(default_factory=list)

    @property
    def inconclusive(self) -> bool:
        return not self.transitive and bool(self.failed_loops)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "degree": self.fiber.degree,
            "transitive": self.transitive,
            "inconclusive": self.inconclusive,
            "orbit_count": self.orbit_count,
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "branch_points": [[z.real, z.imag] for z in self.branch_points],
            "generators": [list(g.mapping) for g in self.generators],
            "failed_loops": self.failed_loops,
            "fiber_residual": float(period_residuals(self.fiber.a, self.fiber.roots, self.p).max()),
        }


def orbit_count(n: int, perms: Sequence[MonodromyPerm]) -> int:
    ds = DisjointSet(range(n))
    for perm in perms:
        for i, j in enumerate(perm.mapping):
            ds.merge(i, j)
    return len(ds.subsets())


def loop_radii(points: Sequence[complex], safety_margin: float, scale: float = 1.0) -> list[float]:
    out = []
    for i, c in enumerate(points):
        nearest = min((abs(c - d) for j, d in enumerate(points) if j != i), default=math.inf)
        out.append(scale * min(safety_margin, 0.5 * nearest))
    return out


def monodromy_transitive(p: int, basepoint: complex = 1.3 + 0.1j, radius_scale: float = 1.0,
                         cfg: ContinuationConfig = ContinuationConfig(),
                         tol: CurveTolerances = DEFAULT_TOL, points: Optional[Sequence[complex]] = None) -> MonodromyResult:
    """Monodromy of the projection (a, v) -> a around every branch point.

    A loop whose continuation fails is dropped.  The surviving permutations
    generate a subgroup, so a single orbit under them still certifies
    transitivity; otherwise the result is reported as inconclusive.
    """
    if p not in SUPPORTED_P:
        raise DomainError(f"monodromy supported for p in {SUPPORTED_P}")
    pts = list(branch_points(p)) if points is None else list(points)
    radii = loop_radii(pts, tol.safety_margin, radius_scale)
    base = fiber(basepoint, p, tol)
    gens, failed = [], []
    for i, (c, r) in enumerate(zip(pts, radii)):
        others = [(d, rd) for j, (d, rd) in enumerate(zip(pts, radii)) if j != i]
        path = loop_around(basepoint, c, r, others)
        try:
            _, perm = continue_fiber(base, path, cfg, tol)
        except NumericalError:
            failed.append(i)
            continue
        gens.append(perm)
    count = orbit_count(base.degree, gens)
    return MonodromyResult(p, count == 1, count, gens, pts, complex(basepoint), base, failed)


# --- smoothness ----------------------------------------------------------------------------


def gradient(p: int, a: complex, v: complex) -> tuple[complex, complex]:
    """(dPhi_p/da, dPhi_p/dv) at (a, v), from the exact coefficients."""
    mat, da, _ = _tables(p)
    pa = a ** np.arange(mat.shape[1])
    cv = mat @ pa
    ca = da @ pa[: da.shape[1]]
    d_v = np.polyval(np.polyder(cv[::-1]), v)
    d_a = np.polyval(ca[::-1], v)
    return complex(d_a), complex(d_v)


def smoothness_spot_check(p: int, samples: int = 100, seed: int = 0, radius: float = 1.5,
                          include_branch_points: bool = True, tol: CurveTolerances = DEFAULT_TOL) -> bool:
    """Gradient of Phi_p is nonzero at sampled curve points (including the
    double roots over branch points when requested)."""
    if p < 2:
        raise DomainError("smoothness check needs p >= 2")
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(samples):
        a = complex(*rng.uniform(-radius, radius, 2))
        fb = fiber_roots(phi_p(a, p, tol), tol, check_exact=False)
        pts.append((a, complex(fb.roots[rng.integers(fb.degree)])))
    if include_branch_points and p in SUPPORTED_P:
        for c in branch_points(p)[: max(samples // 10, 1)]:
            fb = fiber_roots(phi_p(c, p, tol), tol, check_exact=False)
            d = np.abs(fb.roots[:, None] - fb.roots[None, :])
            np.fill_diagonal(d, np.inf)
            i = int(np.unravel_index(d.argmin(), d.shape)[0])
            pts.append((c, complex(fb.roots[i])))
    for a, v in pts:
        ga, gv = gradient(p, a, v)
        if math.hypot(abs(ga), abs(gv)) <= tol.smooth_tol:
            return False
    return True
