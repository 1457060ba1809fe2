"""External rays by backward Newton continuation, the curve through -a that
splits {G < G(-a)} into D0 and D1, and the itineraries read off from it."""
from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np

from .angles import classify
from .dynamics import (
    TWO_PI,
    CubicMap,
    DomainError,
    GeometricAmbiguityError,
    NumericalError,
    cocritical_angle,
    green,
    green_value,
    phi_far_inverse,
)

AngleLike = Union[Fraction, float]
Termination = Literal["green_floor", "singularity", "landing_estimate"]


@dataclass(frozen=True)
class RayPolyline:
    angle: AngleLike
    points: tuple[tuple[complex, float], ...]
    terminated_at: Termination
    landing: Optional[complex] = None

    @property
    def z(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def levels(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["re", "im", "green"])
        for z, g in self.points:
            w.writerow([repr(z.real), repr(z.imag), repr(g)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "angle": str(self.angle),
            "terminated_at": self.terminated_at,
            "landing": None if self.landing is None else [self.landing.real, self.landing.imag],
            "points": [[z.real, z.imag, g] for z, g in self.points],
        }


@dataclass(frozen=True)
class RayConfig:
    base_steps: int = 8
    max_steps_per_band: int = 32
    max_newton: int = 40
    max_halvings: int = 12
    jump_factor: float = 6.0


# below this relative motion consecutive ray points are indistinguishable in double precision
PRECISION_FLOOR = 1e-12


def _angle_mult(t: AngleLike, n: int) -> float:
    if isinstance(t, Fraction):
        x = (t * 3**n) % 1
        return float(x)
    return (t * 3**n) % 1.0


def _newton_iterate(f: CubicMap, z: complex, n: int, target: complex, max_newton: int, tol: float):
    for _ in range(max_newton):
        w, d = z, 1.0 + 0j
        for _ in range(n):
            d *= f.deriv(w)
            w = f(w)
        if d == 0 or not math.isfinite(abs(w)):
            return None
        step = (w - target) / d
        z = z - step
        if abs(step) <= tol * (1.0 + abs(z)):
            return z
    # stalled at roundoff: accept if the last correction is at the noise floor
    if abs(step) <= PRECISION_FLOOR * (1.0 + abs(z)):
        return z
    return None


def default_levels(g_start: float, g_floor: float, cfg: RayConfig) -> list[float]:
    """Geometric levels from g_start down to g_floor; the step count per
    factor-of-3 band doubles band by band (capped)."""
    levels = [g_start]
    g = g_start
    band = 0
    while g > g_floor * (1 + 1e-12):
        steps = min(cfg.base_steps * 2**band, cfg.max_steps_per_band)
        ratio = 3.0 ** (-1.0 / steps)
        for _ in range(steps):
            g = max(g * ratio, g_floor)
            levels.append(g)
            if g <= g_floor:
                break
        band += 1
    return levels


def trace_ray(
    f: CubicMap,
    t: AngleLike,
    g_floor: float,
    *,
    levels: Optional[Sequence[float]] = None,
    cfg: RayConfig = RayConfig(),
    land: bool = False,
) -> RayPolyline:
    """Points of the external ray of angle ``t`` from far out down to ``g_floor``.

    Each point solves f^n(z) = phi^-1(exp(3^n g + 2 pi i 3^n t)) with n large
    enough that the target sits beyond the safe radius; Newton is seeded at
    the previous point and the level step is halved whenever Newton fails or
    the new point jumps.
    """
    if g_floor <= 0:
        raise ValueError("g_floor must be positive")
    g_top = math.log(math.e * f.safe_radius)
    if levels is None:
        levels = default_levels(g_top, g_floor, cfg)
    levels = list(levels)
    tol = f.tol.ray_tol * 1e-4

    def solve(g: float, seed: complex) -> Optional[complex]:
        n = max(0, math.ceil(math.log(g_top / g, 3) - 1e-12))
        W = np.exp(3**n * g + 1j * TWO_PI * _angle_mult(t, n))
        target = phi_far_inverse(f, complex(W))
        if n == 0:
            return target
        return _newton_iterate(f, seed, n, target, cfg.max_newton, tol)

    t_float = float(t)
    seed = np.exp(levels[0] + 1j * TWO_PI * t_float)
    z = solve(levels[0], complex(seed))
    points = [(z, levels[0])]
    # motion per unit of log(g), so the jump test does not depend on the level step
    last_rate = None
    termination: Termination = "green_floor"
    pending = list(levels[1:])
    while pending:
        g_next = pending[0]
        g_prev = points[-1][1]
        if g_next >= g_prev:
            pending.pop(0)
            continue
        ok = False
        for _ in range(cfg.max_halvings):
            cand = solve(g_next, points[-1][0])
            if cand is not None:
                step = abs(cand - points[-1][0])
                dlog = math.log(g_prev / g_next)
                bound = cfg.jump_factor * last_rate * dlog if last_rate else float("inf")
                if step <= PRECISION_FLOOR * (1.0 + abs(cand)):
                    ok = True
                    break
                if step <= bound and abs(green_value(f, cand) - g_next) <= 1e-6 * g_next + 1e-12:
                    ok = True
                    break
            # retry halfway (geometrically) between the current and target levels
            g_mid = math.sqrt(g_prev * g_next)
            pending.insert(0, g_mid)
            g_next = g_mid
        if not ok:
            termination = "singularity"
            break
        pending.pop(0)
        step = abs(cand - points[-1][0])
        if step > PRECISION_FLOOR * (1.0 + abs(cand)):
            last_rate = step / math.log(g_prev / g_next)
        points.append((cand, g_next))

    landing = None
    if land and termination == "green_floor" and isinstance(t, Fraction):
        landing = _polish_landing(f, t, points)
        if landing is not None:
            termination = "landing_estimate"
    return RayPolyline(t, tuple(points), termination, landing)


def _polish_landing(f: CubicMap, t: Fraction, points) -> Optional[complex]:
    """Newton on f^(l+q)(z) = f^l(z) from the deepest ray point, accepted only
    when the correction is comparable to the ray's own remaining motion."""
    cls = classify(t)
    pre, q = cls.preperiod, cls.period
    z_last, g_last = points[-1]
    # point roughly one period up the ray, for the accept radius
    g_ref = g_last * 3.0**q
    ref = min(points, key=lambda pg: abs(math.log(pg[1] / g_ref)))[0]
    scale = abs(z_last - ref)
    z = z_last
    for _ in range(60):
        w, d = z, 1.0 + 0j
        for _ in range(pre):
            d *= f.deriv(w)
            w = f(w)
        w0, d0 = w, d
        for _ in range(q):
            d *= f.deriv(w)
            w = f(w)
        F, dF = w - w0, d - d0
        if dF == 0:
            return None
        step = F / dF
        z -= step
        if abs(step) < 1e-15 * (1 + abs(z)):
            break
    else:
        return None
    if abs(z - z_last) > 2.0 * scale + 1e-12:
        return None
    return z


def ray_landing(f: CubicMap, t: Fraction, g_floor: float = 1e-6, **kw) -> RayPolyline:
    return trace_ray(f, t, g_floor, land=True, **kw)


def limit_ray(f: CubicMap, t: Fraction, sign: Literal["+", "-"], g_floor: float, eps0: float = 1e-3,
              min_eps: float = 1e-10, agree: Optional[float] = None, **kw) -> tuple[RayPolyline, float]:
    """Right (+) or left (-) limit ray at ``t``: trace R(t +/- eps) with eps
    halving until the deepest point moves by less than ``agree`` (default
    the map's ray_tol, at least 1e-7)."""
    agree = max(f.tol.ray_tol, 1e-7) if agree is None else agree
    eps = eps0
    prev = None
    s = 1.0 if sign == "+" else -1.0
    while eps >= min_eps:
        ray = trace_ray(f, (float(t) + s * eps) % 1.0, g_floor, **kw)
        if prev is not None and ray.terminated_at == "green_floor" and prev.terminated_at == "green_floor":
            if abs(ray.points[-1][0] - prev.points[-1][0]) < agree:
                return ray, eps
        prev = ray
        eps /= 2
    return prev, eps * 2


# --- the separation curve ----------------------------------------------------


@dataclass(frozen=True)
class SeparationCurve:
    theta: float
    left: RayPolyline
    right: RayPolyline
    junction: complex
    green_critical: float

    def segments(self) -> np.ndarray:
        """All polyline edges (both branches joined at -a) as an (m, 2) array."""
        pts = [z for z, _ in self.left.points] + [self.junction]
        segs = list(zip(pts[:-1], pts[1:]))
        pts = [z for z, _ in self.right.points] + [self.junction]
        segs += list(zip(pts[:-1], pts[1:]))
        return np.array(segs, dtype=complex)


def _separation_levels(g_top: float, gc: float, cfg: RayConfig, d_stop: float) -> list[float]:
    levels = default_levels(g_top, 2.0 * gc, cfg) if g_top > 2 * gc else [g_top]
    # then approach the critical level geometrically in (g - gc)
    d = levels[-1] - gc
    while d > d_stop:
        d = max(0.5 * d, d_stop)
        levels.append(gc + d)
    return levels


def _local_preimage(a: float | complex, delta: complex, u0: complex) -> complex:
    """Root of u^3 - 3a u^2 = delta nearest the seed u0 (Newton)."""
    u = u0
    for _ in range(50):
        F = u * u * (u - 3 * a) - delta
        dF = u * (3 * u - 6 * a)
        if dF == 0:
            break
        step = F / dF
        u -= step
        if abs(step) <= 1e-15 * abs(u):
            break
    return u


def _separation_tail(f: CubicMap, theta: float, gc: float, d0: float, branches, cfg: RayConfig):
    """Extend both branches from level gc + d0 down to within join_tol / 10 of -a.

    Points at level gc + d are preimages near -a of the ray of angle 3 theta
    at level 3 (gc + d), which is regular there, so no precision is lost at
    the critical point.
    """
    a, vc = f.a, f(-f.a)
    g_top = math.log(math.e * f.safe_radius)
    stop = f.tol.join_tol / 10
    ds = []
    d = d0
    # |u| ~ sqrt(d); go until |u| is well below the join tolerance
    u_scale = abs(branches[0][-1][0] + a)
    while u_scale * math.sqrt(d / d0) > stop and len(ds) < 200:
        d *= 0.5
        ds.append(d)
    if not ds:
        return branches
    # when the critical value is already beyond the safe radius the targets are exact
    top = default_levels(g_top, 3 * (gc + d0), cfg) if g_top > 3 * (gc + d0) else []
    image = trace_ray(f, (3 * theta) % 1.0, 3 * (gc + ds[-1]), levels=top + [3 * (gc + d) for d in ds], cfg=cfg)
    if image.terminated_at != "green_floor":
        raise NumericalError("image ray of the separation curve did not reach the critical value")
    tail_w = image.points[len(top):]
    out = []
    for branch in branches:
        pts = list(branch)
        u = pts[-1][0] + a
        for (w, gw) in tail_w:
            u = _local_preimage(a, w - vc, u * math.sqrt(0.5))
            pts.append((u - a, gw / 3))
        out.append(pts)
    return out


def separation_curve(f: CubicMap, cfg: RayConfig = RayConfig()) -> SeparationCurve:
    """The two rays of angles theta +/- 1/3 down to the free critical point -a,
    where theta is the cocritical angle."""
    gc = green(f, -f.a)
    if not gc.escaped:
        raise DomainError("the free critical point does not escape")
    theta = cocritical_angle(f)
    g_top = math.log(math.e * f.safe_radius)
    d_stop = 1e-4 * gc.green
    levels = _separation_levels(g_top, gc.green, cfg, d_stop)
    rays = []
    for shift in (1.0 / 3.0, -1.0 / 3.0):
        ray = trace_ray(f, (theta + shift) % 1.0, levels[-1], levels=levels, cfg=cfg)
        if ray.terminated_at != "green_floor":
            raise NumericalError("ray through the free critical point did not reach it")
        rays.append(ray)
    branches = _separation_tail(f, theta, gc.green, d_stop, [r.points for r in rays], cfg)
    for pts in branches:
        if abs(pts[-1][0] + f.a) > f.tol.join_tol:
            raise NumericalError("separation ray does not terminate at the free critical point")
    left, right = (
        RayPolyline(r.angle, tuple(pts), "green_floor", None) for r, pts in zip(rays, branches)
    )
    return SeparationCurve(theta, left, right, -f.a, gc.green)


def _crossings(p0: complex, p1: complex, segs: np.ndarray, near: float) -> Optional[int]:
    """Proper crossings of [p0, p1] with the segments; None when degenerate."""
    a, b = segs[:, 0], segs[:, 1]
    d = p1 - p0
    e = b - a
    denom = (d.real * e.imag - d.imag * e.real)
    w = a - p0
    s = (w.real * e.imag - w.imag * e.real)
    u = (w.real * d.imag - w.imag * d.real)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = s / denom
        u = u / denom
    hit = (denom != 0) & (s >= 0) & (s <= 1) & (u >= 0) & (u <= 1)
    # degenerate if the path passes within `near` of a vertex
    for v in (a, b):
        t = np.clip(((v - p0) * np.conj(d)).real / max(abs(d) ** 2, 1e-300), 0, 1)
        if np.any(np.abs(p0 + t * d - v) < near):
            return None
    return int(np.count_nonzero(hit))


def side_of(f: CubicMap, sep: SeparationCurve, z: complex, *, seed: int = 0) -> int:
    """0 if z lies in D0 (with a), 1 if in D1, by crossing parity of a path
    from z to a against the separation curve."""
    z = complex(z)
    if green_value(f, z) >= sep.green_critical:
        raise DomainError("side_of needs G(z) < G(-a)")
    segs = sep.segments()
    near = f.tol.ray_tol
    rng = random.Random(seed)
    target = f.a
    count = _crossings(z, target, segs, near)
    tries = 0
    while count is None and tries < 20:
        # detour through a random intermediate point
        r = abs(z - target) + 1e-3
        mid = 0.5 * (z + target) + r * complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        c1 = _crossings(z, mid, segs, near)
        c2 = _crossings(mid, target, segs, near)
        count = None if c1 is None or c2 is None else c1 + c2
        tries += 1
    if count is None:
        raise GeometricAmbiguityError(f"cannot classify {z}: too close to the separation curve")
    return count % 2


def kneading_word(f: CubicMap, sep: Optional[SeparationCurve] = None) -> str:
    """The D0/D1 word of a_1, ..., a_p; the last symbol is 0 since a_p = a."""
    if f.p < 2:
        raise DomainError("kneading words need p >= 2")
    sep = separation_curve(f) if sep is None else sep
    pts = f.orbit(f.a, f.p + 1)[1:]
    bits = []
    for z in pts:
        if green_value(f, z) >= sep.green_critical:
            raise NumericalError("marked orbit point outside D0 and D1")
        bits.append(str(side_of(f, sep, z)))
    if bits[-1] != "0":
        raise NumericalError("a_p = a was not placed in D0")
    return "".join(bits)


def itinerary_word(f: CubicMap, z: complex, ell: int, sep: Optional[SeparationCurve] = None) -> Optional[str]:
    """Sides of z, f(z), ..., f^(ell-1)(z); None if some iterate leaves D0 and D1."""
    sep = separation_curve(f) if sep is None else sep
    out = []
    for _ in range(ell):
        if green_value(f, z) >= sep.green_critical:
            return None
        out.append(str(side_of(f, sep, z)))
        z = f(z)
    return "".join(out)


def fixed_and_prefixed(f: CubicMap, sep: Optional[SeparationCurve] = None) -> tuple[complex, complex, complex]:
    """The fixed point in D1 and its two preimages in D0."""
    sep = separation_curve(f) if sep is None else sep
    a, v = f.a, f.v
    fixed = np.roots([1, 0, -3 * a * a - 1, 2 * a**3 + v])
    sides = [side_of(f, sep, z) for z in fixed]
    if sides.count(1) != 1:
        raise GeometricAmbiguityError(f"expected one fixed point in D1, sides {sides}")
    z_fix = complex(fixed[sides.index(1)])
    pre = np.roots([1, 0, -3 * a * a, 2 * a**3 + v - z_fix])
    # drop the preimage that is the fixed point itself
    pre = sorted(pre, key=lambda w: abs(w - z_fix))[1:]
    z1, z2 = (complex(w) for w in pre)
    for w in (z1, z2):
        if side_of(f, sep, w) != 0:
            raise GeometricAmbiguityError("prefixed point not in D0")
    return z_fix, z1, z2


def polylines_to_json(rays: Iterable[RayPolyline]) -> str:
    return json.dumps([r.to_json() for r in rays])
