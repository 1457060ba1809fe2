"""Scalar numerics for one cubic f(z) = (z - a)^2 (z + 2a) + v.

Green function, Boettcher coordinates at infinity and at the marked cycle,
and the flow-line machinery used to fix their branches.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

TWO_PI = 2.0 * math.pi
# relative size below which a cycle offset is indistinguishable from rounding
ROUNDOFF = 1e-13


class DomainError(ValueError):
    """A point or map falls outside an operation's domain."""


class NumericalError(ArithmeticError):
    """An iterative method failed to converge."""


class ConfigurationError(DomainError):
    """A run parameter (level, resolution, window) is unusable for the data."""


class GeometricAmbiguityError(NumericalError):
    """A point sits too close to a separating curve to be classified."""


@dataclass(frozen=True)
class Tolerances:
    curve_tol: float = 1e-10
    ray_tol: float = 1e-9
    join_tol: float = 1e-6
    max_iter: int = 2000
    exactness_floor: float = 1e-6


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class CubicMap:
    """f_{a,v}(z) = (z - a)^2 (z + 2a) + v with critical points a and -a.

    ``p`` is the intended period of the marked critical point ``a``.
    """

    a: complex
    v: complex
    p: int = 1
    tol: Tolerances = field(default=DEFAULT_TOL, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "v", complex(self.v))

    def __call__(self, z):
        a = self.a
        return (z - a) ** 2 * (z + 2 * a) + self.v

    def deriv(self, z):
        return 3.0 * (z * z - self.a * self.a)

    def iterate(self, z, n: int):
        for _ in range(n):
            z = self(z)
        return z

    def orbit(self, z: complex, n: int) -> list[complex]:
        out = [complex(z)]
        for _ in range(n - 1):
            out.append(self(out[-1]))
        return out

    @property
    def escape_radius(self) -> float:
        return max(4.0, 2.0 * (abs(self.a) + abs(self.v)) + 2.0)

    @property
    def safe_radius(self) -> float:
        """Beyond this radius |f(z)/z^3 - 1| < 1/4 and the principal-branch
        Boettcher product is exact."""
        c = abs(2 * self.a**3 + self.v)
        return max(10.0, 6.0 * abs(self.a), 4.0 * c ** (1.0 / 3.0))

    def marked_cycle(self) -> list[complex]:
        return self.orbit(self.a, self.p)

    def period_residual(self) -> float:
        return abs(self.iterate(self.a, self.p) - self.a)

    def on_curve(self) -> bool:
        if self.period_residual() >= self.tol.curve_tol:
            return False
        for d in range(1, self.p):
            if self.p % d == 0 and abs(self.iterate(self.a, d) - self.a) < self.tol.curve_tol:
                return False
        return True

    def cycle_multiplier(self, z: complex, q: int) -> complex:
        lam = 1.0 + 0j
        for _ in range(q):
            lam *= self.deriv(z)
            z = self(z)
        return lam


def evaluate(f: CubicMap, z):
    return f(z)


@dataclass(frozen=True)
class EscapeResult:
    escaped: bool
    first_escape_iter: Optional[int]
    green: float
    budget_exhausted: bool = False


def green(f: CubicMap, z: complex, max_iter: Optional[int] = None) -> EscapeResult:
    """Escape rate G(z) = lim 3^-n log|f^n(z)|, natural-log units.

    Iterates well past the escape radius so the first-order correction makes
    the truncation error negligible; 0 with ``budget_exhausted`` otherwise.
    """
    max_iter = f.tol.max_iter if max_iter is None else max_iter
    r0 = f.escape_radius
    big = max(1e12, r0 * r0)
    z = complex(z)
    first = None
    for n in range(max_iter + 40):
        az = abs(z)
        if first is None and az > r0:
            first = n
        if az > big:
            eps = (f(z) - z**3) / z**3
            return EscapeResult(True, first, (math.log(az) + math.log(abs(1 + eps)) / 3.0) * 3.0 ** -n)
        if first is None and n >= max_iter:
            break
        z = f(z)
    return EscapeResult(False, None, 0.0, budget_exhausted=True)


def green_value(f: CubicMap, z: complex) -> float:
    return green(f, z).green


def log_phi_far(f: CubicMap, w: complex) -> complex:
    """log of the Boettcher coordinate on |w| >= safe_radius.

    Imaginary part is Arg(w) plus the principal-branch corrections, so it is a
    continuous determination on that region.
    """
    if abs(w) < f.safe_radius * (1 - 1e-12):
        raise DomainError("log_phi_far called inside the safe radius")
    out = cmath.log(w)
    scale = 1.0 / 3.0
    for _ in range(60):
        fw = f(w)
        eps = fw / w**3 - 1.0
        if abs(eps) < 1e-18:
            break
        out += cmath.log(1 + eps) * scale
        scale /= 3.0
        w = fw
        if abs(w) > 1e100:
            break
    return out


def phi_far_inverse(f: CubicMap, W: complex) -> complex:
    """Solve phi(w) = W for |W| beyond the safe radius."""
    w = W
    for _ in range(60):
        lp = log_phi_far(f, w)
        step = cmath.exp(cmath.log(W) - lp)
        # arguments may differ by 2 pi; the ratio is what matters
        w_new = w * step
        if abs(w_new - w) <= 1e-15 * abs(w):
            return w_new
        w = w_new
    return w


def _escape_to_safe(f: CubicMap, z: complex, max_iter: int) -> tuple[int, complex]:
    r = f.safe_radius
    for k in range(max_iter):
        if abs(z) >= r:
            return k, z
        z = f(z)
    raise DomainError("orbit does not escape within the iteration budget")


def dlog_phi(f: CubicMap, z: complex) -> complex:
    """Derivative of log(phi) at z: lim (f^n)'(z) / (3^n f^n(z))."""
    d = 1.0 + 0j
    scale = 1.0
    big = max(1e8, 1e4 * f.safe_radius)
    for _ in range(f.tol.max_iter):
        if abs(z) > big:
            return d * scale / z
        d *= f.deriv(z)
        z = f(z)
        scale /= 3.0
    raise DomainError("orbit does not escape")


def _flow_to(fn_dlog, z0: complex, h0: float, h1: float, rtol: float = 1e-10):
    """Follow the flow line of log|phi| (phi with derivative-of-log ``fn_dlog``)
    from level h0 to level h1, keeping arg(phi) fixed."""

    def rhs(_h, y):
        d = fn_dlog(complex(y[0], y[1]))
        if d == 0 or not np.isfinite(abs(d)):
            raise NumericalError("flow hit a critical point")
        w = 1.0 / d
        return [w.real, w.imag]

    sol = solve_ivp(rhs, (h0, h1), [z0.real, z0.imag], method="DOP853", rtol=rtol, atol=1e-12)
    if not sol.success:
        raise NumericalError(f"flow integration failed: {sol.message}")
    return complex(sol.y[0, -1], sol.y[1, -1])


def external_angle_float(f: CubicMap, z: complex, g: Optional[float] = None) -> float:
    """Argument of phi(z) in turns, for z on a smooth flow line above the
    critical level (or on the flow line through the cocritical point).

    The value is pinned down exactly by the far-out orbit point; the upward
    flow only selects which 3^k-th root is the right one.
    """
    z = complex(z)
    g = green_value(f, z) if g is None else g
    if g <= 0:
        raise DomainError("point does not escape")
    k, zk = _escape_to_safe(f, z, f.tol.max_iter)
    tk = log_phi_far(f, zk).imag / TWO_PI
    if k == 0:
        return tk % 1.0
    g_top = max(math.log(2.0 * f.safe_radius), g + 1.0)
    w = _flow_to(lambda u: dlog_phi(f, u), z, g, g_top)
    if abs(w) < f.safe_radius:
        raise NumericalError("flow line did not reach the safe radius")
    t_approx = log_phi_far(f, w).imag / TWO_PI
    n = 3**k
    j = round(t_approx * n - tk)
    t = ((tk + j) / n) % 1.0
    miss = abs(((t_approx - t + 0.5) % 1.0) - 0.5)
    if miss > 0.25 / n:
        raise NumericalError("branch tracking failed: flow angle drifted too far")
    return t


def boettcher_external(f: CubicMap, z: complex) -> complex:
    """phi_f(z) for z strictly above the level of the free critical point."""
    g = green_value(f, z)
    gc = green_value(f, -f.a)
    if g <= gc * (1 + 1e-12) or g == 0:
        raise DomainError("boettcher_external needs G(z) > G(-a)")
    t = external_angle_float(f, z, g)
    return cmath.exp(g + 1j * TWO_PI * t)


def cocritical_angle(f: CubicMap) -> float:
    """Argument (in turns) of phi_f at the cocritical point 2a."""
    gc = green(f, -f.a)
    if not gc.escaped:
        raise DomainError("the free critical point does not escape")
    if abs(f.a) < 1e-12:
        raise DomainError("a = 0: cocritical and critical points coincide")
    return external_angle_float(f, 2 * f.a, gc.green)


# --- the marked cycle -------------------------------------------------------


def cycle_scale(f: CubicMap, k: int) -> complex:
    """Leading coefficient c with f^p(a_k + u) = a_k + c u^2 + O(u^3)."""
    pts = f.marked_cycle()
    p = f.p
    k %= p
    # f^(p-k) carries a_k to a_0 = a, then a quadratic fold, then f^(k-1) onward
    d_in = 1.0 + 0j
    if k:
        for j in range(k, p):
            d_in *= f.deriv(pts[j])
    d_out = 1.0 + 0j
    for j in range(1, k if k else p):
        d_out *= f.deriv(pts[j])
    if k == 0:
        return 3 * f.a * d_out
    return 3 * f.a * d_in * d_in * d_out


def _local_orbit(f: CubicMap, k: int, z: complex, budget: int):
    pts = f.marked_cycle()
    ak = pts[k % f.p]
    u = z - ak
    us = [u]
    floor = ROUNDOFF * (1.0 + abs(ak))
    for _ in range(budget):
        if abs(u) < floor:
            break
        u = f.iterate(ak + u, f.p) - ak
        us.append(u)
    return ak, us


def _log_psi_near(c: complex, us: Sequence[complex], floor: float = 0.0) -> Optional[complex]:
    """Principal-branch product for the local coordinate; None when some
    factor is not close to 1 (the point is not in the near region).  Orbit
    points below ``floor`` are roundoff and end the product."""
    out = cmath.log(c * us[0])
    scale = 0.5
    for u0, u1 in zip(us, us[1:]):
        if abs(u1) <= floor or u0 == 0:
            break
        r = u1 / (c * u0 * u0)
        if abs(r - 1) > 0.25:
            return None
        out += cmath.log(r) * scale
        scale *= 0.5
    return out


def dlog_psi(f: CubicMap, k: int, z: complex) -> complex:
    pts = f.marked_cycle()
    ak = pts[k % f.p]
    d = 1.0 + 0j
    scale = 1.0
    u = z - ak
    best = None
    floor = ROUNDOFF * (1.0 + abs(ak))
    for _ in range(60):
        if abs(u) < floor:
            break
        best = d * scale / u
        zz = ak + u
        for _ in range(f.p):
            d *= f.deriv(zz)
            zz = f(zz)
        u = zz - ak
        scale *= 0.5
        if best is not None and u != 0 and abs(d * scale / u - best) < 1e-14 * abs(best):
            return d * scale / u
    if best is None:
        raise DomainError("point coincides with the cycle")
    return best


# fraction of the marked cycle radius inside which psi(z) = c (z - a_k) is used
NEAR_FRACTION = 1e-6


def _near_radius(f: CubicMap) -> float:
    pts = f.marked_cycle()
    if len(pts) < 2:
        return NEAR_FRACTION * (1.0 + abs(f.a))
    return NEAR_FRACTION * 0.5 * min(abs(x - y) for i, x in enumerate(pts) for y in pts[i + 1:])


def _solve_iterate(f: CubicMap, z: complex, n: int, target: complex, scale: float,
                   iters: int = 60) -> Optional[complex]:
    """Newton for f^n(z) = target from z; ``scale`` is the size against
    which corrections are judged (the distance to the attracting point)."""
    step = math.inf
    for _ in range(iters):
        w, d = z, 1.0 + 0j
        try:
            for _ in range(n):
                d *= f.deriv(w)
                w = f(w)
        except OverflowError:
            return None
        if d == 0 or not math.isfinite(abs(w)):
            return None
        step = (w - target) / d
        z = z - step
        if abs(step) <= 1e-13 * scale:
            return z
    return z if abs(step) <= 1e-8 * scale else None


def internal_ray(f: CubicMap, k: int, t: float, r_end: float, steps_per_halving: int = 4) -> list[tuple[complex, float]]:
    """Points of the internal ray of angle ``t`` (turns) in the Fatou
    component of a_k, as (z, r) pairs with psi(z) = r exp(2 pi i t), r from
    the near region up to ``r_end``.

    Each point solves f^(np)(z) = a_k + (r e^(2 pi i t))^(2^n) / c with n
    just large enough for the right side to sit in the near region.
    """
    c = cycle_scale(f, k)
    ak = f.marked_cycle()[k % f.p]
    if c == 0:
        raise DomainError("degenerate cycle: a_k is more than simply critical for f^p")
    # the ray only needs to be right to a small fraction of its length, so a
    # larger near region than in the value computation keeps the Newton
    # targets well above the rounding level of f^p
    rho = abs(c) * _near_radius(f) * 1e3
    direction = cmath.exp(2j * math.pi * t)
    r0 = min(0.5 * rho, r_end)
    z = ak + r0 * direction / c
    out = [(z, r0)]
    if r_end <= r0:
        return out
    g, g_end = -math.log(r0), -math.log(r_end)
    ratio = 2.0 ** (-1.0 / steps_per_halving)
    log_rho = -math.log(rho)
    h = 1.0
    while g > g_end * (1 + 1e-14):
        # r grows at most by a factor 2 per step
        g_new = max(g * ratio ** h, g - h * math.log(2.0), g_end)
        r = math.exp(-g_new)
        n = max(0, math.ceil(math.log2(log_rho / g_new)))
        e = 2**n
        target = ak + r**e * cmath.exp(2j * math.pi * ((t * e) % 1.0)) / c
        new = _solve_iterate(f, z, n * f.p, target, abs(z - ak) + abs(target - ak))
        if new is None:
            h *= 0.5
            if h < 1e-6:
                raise NumericalError("internal ray stalled")
            continue
        z, g = new, g_new
        out.append((z, r))
        h = min(1.0, 2 * h)
    return out


def local_boettcher_cycle(f: CubicMap, k: int, z: complex, budget: int = 200) -> complex:
    """Boettcher coordinate of f^p at the marked cycle point a_k, with
    psi(f^p(z)) = psi(z)^2 and psi ~ c (z - a_k).

    The modulus comes straight from the orbit.  For the argument, the first
    orbit point in the near region is evaluated directly and the square
    roots back up the orbit are resolved by tracing the internal ray of
    each candidate angle and keeping the one that ends at the orbit point.
    """
    c = cycle_scale(f, k)
    if c == 0:
        # a = 0: the two critical points merge and f^p is cubic at the cycle
        raise DomainError("degenerate marked cycle: a = 0 makes f^p locally cubic")
    ak, us = _local_orbit(f, k, complex(z), budget)
    floor = ROUNDOFF * (1.0 + abs(ak))
    if abs(us[-1]) > floor:
        raise DomainError("point is not attracted to a_k under f^p")
    if us[0] == 0:
        return 0j
    near = _near_radius(f)
    m = next((j for j, u in enumerate(us) if abs(u) <= near), None)
    if m is None:
        raise NumericalError("orbit never enters the local normal-form region")
    log_psi = _log_psi_near(c, us[m:], floor)
    if log_psi is None:
        log_psi = cmath.log(c * us[m])
    for j in range(m - 1, -1, -1):
        half = log_psi / 2
        zj = ak + us[j]
        r_end = math.exp(half.real) * (1.0 - 1e-6)
        best = None
        for shift in (0.0, math.pi):
            cand = complex(half.real, half.imag + shift)
            try:
                end = internal_ray(f, k, (cand.imag / TWO_PI) % 1.0, r_end)[-1][0]
            except NumericalError:
                continue
            d = abs(end - zj)
            if best is None or d < best[0]:
                best = (d, cand)
        if best is None:
            raise NumericalError("no internal ray reaches the orbit point")
        log_psi = best[1]
    return cmath.exp(log_psi)
