"""Parameter space of the period-p curve: escape regions, parameter rays,
landing estimates and hyperbolic types.

Points of the curve are carried around as :class:`CubicMap` values with
``p`` set.  In an escape region the coordinate is
``Phi_U(f) = phi_f(2a)``, handled through its logarithm
``log Phi_U = G_f(-a) + 2 pi i theta``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

from . import curve
from .angles import classify as classify_angle, angle as to_angle
from .dynamics import (
    TWO_PI,
    CubicMap,
    DomainError,
    ConfigurationError,
    NumericalError,
    cocritical_angle,
    green,
    local_boettcher_cycle,
    log_phi_far,
)
from .rays import AngleLike, _polish_landing, kneading_word, limit_ray

# --- Phi_U ----------------------------------------------------------------------


def _critical_value_escape(f: CubicMap, max_iter: int = 1500) -> tuple[int, complex]:
    """(k, f^k(v_c)) with f^k(v_c) beyond the safe radius, v_c = f(-a)."""
    w = f(-f.a)
    r = f.safe_radius
    for k in range(max_iter):
        if abs(w) >= r:
            return k, w
        w = f(w)
        if not math.isfinite(abs(w)):
            break
    raise DomainError("the free critical point does not escape")


def log_phi_u(f: CubicMap, ref: Optional[complex] = None) -> complex:
    """log phi_f(2a) = G(-a) + 2 pi i theta with theta the cocritical angle.

    ``ref`` selects the branch: the imaginary part is the one nearest to
    ``ref.imag``.  Without ``ref`` the principal angle comes from the
    gradient-flow computation of the cocritical angle.
    """
    k, w = _critical_value_escape(f)
    n = 3 ** (k + 1)
    base = log_phi_far(f, w)
    if ref is None:
        theta = cocritical_angle(f)
        target = TWO_PI * theta
    else:
        target = ref.imag
    j = round((target * n - base.imag) / TWO_PI)
    return complex(base.real / n, (base.imag + TWO_PI * j) / n)


# --- Newton on the curve --------------------------------------------------------


def _lower_factor(p: int, a: complex, v: complex) -> complex:
    out = 1.0 + 0j
    for d in range(1, p):
        if p % d == 0:
            coeffs = curve._eval_coeffs_float(d, a)
            out *= np.polyval(coeffs[::-1], v)
    return out


def curve_equation(p: int, a: complex, v: complex) -> complex:
    """Phi_p(a, v) evaluated as (f^p(a) - a) / prod Phi_d(a, v)."""
    f = CubicMap(a, v)
    return (f.iterate(a, p) - a) / _lower_factor(p, a, v)


@dataclass(frozen=True)
class NewtonConfig:
    max_iter: int = 40
    tol: float = 1e-13
    fd_step: float = 1e-7


def ray_offset(f: CubicMap, theta: AngleLike) -> complex:
    """log Phi_U(f) - 2 pi i theta on the branch nearest zero.

    On the parameter ray of angle theta this is exactly G(-a).  Writing it as
    (log phi(f^k(v_c)) - 2 pi i frac(3^(k+1) theta)) / 3^(k+1) keeps full
    relative precision however small G(-a) is; ``theta`` should be a Fraction
    for deep levels so the fractional part is exact.
    """
    k, w = _critical_value_escape(f)
    n = 3 ** (k + 1)
    base = log_phi_far(f, w)
    if isinstance(theta, Fraction):
        frac = float((theta * n) % 1)
    else:
        frac = (float(theta) * n) % 1.0
    im = base.imag - TWO_PI * frac
    im = (im + math.pi) % TWO_PI - math.pi
    return complex(base.real, im) / n


def solve_phi_u(p: int, a: complex, v: complex, theta: AngleLike, level: float,
                cfg: NewtonConfig = NewtonConfig(), scale: Optional[float] = None) -> Optional[tuple[complex, complex]]:
    """2x2 complex Newton for {Phi_p(a, v) = 0, Phi_U = exp(level + 2 pi i theta)}.

    The second equation is posed as log(ray_offset) = log(level), which is
    holomorphic and scale free.  The Jacobian is a central finite difference
    with step ``cfg.fd_step * (1 + |z|)``, reduced to ``1e-3 * scale`` when a
    motion scale is given (near a landing point the solution moves by tiny
    amounts and a fixed step would straddle it).
    """
    if level <= 0:
        raise DomainError("level must be positive")
    log_s = math.log(level)

    def residual(x, y):
        off = ray_offset(CubicMap(x, y, p), theta)
        if off == 0:
            raise DomainError("on the critical level")
        return np.array([curve_equation(p, x, y), cmath.log(off) - log_s])

    z = np.array([a, v], dtype=complex)
    for _ in range(cfg.max_iter):
        try:
            r0 = residual(*z)
            jac = np.empty((2, 2), dtype=complex)
            for col in range(2):
                h = cfg.fd_step * (1.0 + abs(z[col]))
                if scale is not None:
                    h = min(h, max(1e-3 * scale, 1e-14 * (1.0 + abs(z[col]))))
                dz = np.zeros(2, dtype=complex)
                dz[col] = h
                jac[:, col] = (residual(*(z + dz)) - residual(*(z - dz))) / (2 * h)
            step = np.linalg.solve(jac, -r0)
        except (DomainError, np.linalg.LinAlgError, OverflowError, ZeroDivisionError, ValueError):
            return None
        if not np.all(np.isfinite(step)):
            return None
        z = z + step
        if np.all(np.abs(step) <= cfg.tol * (1.0 + np.abs(z))):
            return complex(z[0]), complex(z[1])
    return None


# --- parameter rays ---------------------------------------------------------------


@dataclass(frozen=True)
class EscapeSample:
    map: CubicMap
    kneading: Optional[str]
    theta: float
    green_minus_a: float
    log_phi: complex = 0j

    def to_json(self) -> dict:
        return {
            "a": [self.map.a.real, self.map.a.imag],
            "v": [self.map.v.real, self.map.v.imag],
            "kneading": self.kneading,
            "theta": self.theta,
            "green_minus_a": self.green_minus_a,
        }


def escape_sample(f: CubicMap, with_kneading: bool = True, ref: Optional[complex] = None) -> EscapeSample:
    lp = log_phi_u(f, ref)
    word = kneading_word(f) if with_kneading else None
    return EscapeSample(f, word, (lp.imag / TWO_PI) % 1.0, lp.real, lp)


@dataclass
class ParameterRayTrace:
    theta: float
    samples: list[tuple[CubicMap, float]]
    complete: bool = True
    # "level_floor", "precision_floor" (landed to double precision) or "stalled"
    reason: str = "level_floor"

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "complete": self.complete,
            "reason": self.reason,
            "samples": [
                {"a": [f.a.real, f.a.imag], "v": [f.v.real, f.v.imag], "level": s} for f, s in self.samples
            ],
        }


@dataclass(frozen=True)
class TraceConfig:
    steps_per_halving: int = 4
    max_halvings: int = 30
    max_log_fraction: float = 0.05
    newton: NewtonConfig = NewtonConfig()


class _SheetGap:
    """Distance from a curve point to the nearest other point of its fiber,
    recomputed only when ``a`` has moved by a fraction of the last value."""

    def __init__(self, p: int):
        self.p = p
        self.at: Optional[complex] = None
        self.gap = math.inf

    def __call__(self, a: complex, v: complex) -> float:
        if self.at is None or abs(a - self.at) > self.gap / 8:
            roots = curve.fiber_roots(curve.phi_p(a, self.p), check_exact=False).roots
            d = np.sort(np.abs(roots - v))
            self.gap = float(d[1]) if len(d) > 1 else math.inf
            self.at = a
        return self.gap


def _accept(new: tuple[complex, complex], pred: tuple[complex, complex], last_move: float) -> bool:
    """Reject Newton solutions that land far from the predictor (a jump to
    another sheet or another ray)."""
    miss = abs(new[0] - pred[0]) + abs(new[1] - pred[1])
    return miss <= max(0.5 * last_move, 1e-12 * (1 + abs(pred[0]) + abs(pred[1])))


def trace_parameter_ray(p: int, seed: EscapeSample, theta: AngleLike, level_floor: float,
                        cfg: TraceConfig = TraceConfig(), angle_tol: float = 1e-6) -> ParameterRayTrace:
    """Follow Phi_U = exp(s + 2 pi i theta) from the seed's level down to
    ``level_floor`` with s decreasing geometrically.  Steps shrink when
    Newton fails or jumps; the trace is returned partial (``complete`` False)
    when they cannot shrink further."""
    if level_floor <= 0:
        raise DomainError("level_floor must be positive")
    if not isinstance(theta, Fraction):
        theta = float(theta) % 1.0
    dtheta = ((seed.theta - float(theta) + 0.5) % 1.0) - 0.5
    if abs(dtheta) > angle_tol:
        raise DomainError(f"seed angle {seed.theta} differs from theta={float(theta)}")
    f0 = seed.map
    a, v, s = f0.a, f0.v, seed.green_minus_a
    # put the seed exactly on the ray
    sol = solve_phi_u(p, a, v, theta, s, cfg.newton)
    if sol is None:
        raise NumericalError("seed does not converge onto the ray")
    a, v = sol
    out = ParameterRayTrace(float(theta), [(CubicMap(a, v, p), s)])
    base_step = math.log(2.0) / cfg.steps_per_halving
    dlog = base_step
    prev = None
    still = 0
    gap = _SheetGap(p)
    while s > level_floor * (1 + 1e-12):
        # steps in log(s) grow up to a fixed fraction of log(1/s)
        dlog = min(dlog, base_step + cfg.max_log_fraction * abs(math.log(s)))
        for _ in range(cfg.max_halvings):
            s_new = max(s * math.exp(-dlog), level_floor)
            if s_new >= s:
                break
            if prev is not None:
                # predictor linear in log(s)
                t = math.log(s_new / s) / math.log(s / prev[2])
                pred = (a + t * (a - prev[0]), v + t * (v - prev[1]))
                last = abs(t) * (abs(a - prev[0]) + abs(v - prev[1]))
                if last > 0.25 * gap(a, v):
                    dlog *= 0.5
                    continue
            else:
                # first step: a tiny probe fixes the motion scale, so that
                # later steps cannot drift onto a nearby sheet
                s_new = s * math.exp(-1e-6)
                pred, last = (a, v), 1e-3 * (1 + abs(a))
            sol = solve_phi_u(p, pred[0], pred[1], theta, s_new, cfg.newton, scale=last)
            if sol is not None and _accept(sol, pred, last):
                break
            dlog *= 0.5
        else:
            out.complete, out.reason = False, "stalled"
            return out
        if s_new >= s:
            out.complete, out.reason = False, "stalled"
            return out
        moved = abs(sol[0] - a) + abs(sol[1] - v)
        prev = (a, v, s)
        a, v = sol
        s = s_new
        out.samples.append((CubicMap(a, v, p), s))
        still = still + 1 if moved <= 1e-14 * (1 + abs(a) + abs(v)) else 0
        if still >= 3:
            # the ray has landed to double precision
            out.complete, out.reason = False, "precision_floor"
            return out
        dlog *= 1.5
    return out


def walk_angle(p: int, sample: EscapeSample, dtheta: float, step: float = 1 / 64,
               cfg: NewtonConfig = NewtonConfig(), min_step: float = 1e-9) -> list[EscapeSample]:
    """Continue along the level curve G(-a) = const, moving the cocritical
    angle by ``dtheta`` turns (unwrapped, either sign).  Returns a sample at
    every accepted step, the last one exactly at the requested angle.
    Kneading words are not computed here.

    The angle moves by less than a quarter of the ambiguity 3^-(k+1) of the
    ray equation per step (k the escape time of the critical value), so the
    tracked angle stays on its branch.
    """
    a, v, lp = sample.map.a, sample.map.v, sample.log_phi
    level = sample.green_minus_a
    theta0 = lp.imag / TWO_PI
    out = [sample]
    done = 0.0
    sign = 1.0 if dtheta >= 0 else -1.0
    h = step
    prev = None
    gap = _SheetGap(p)
    while abs(done) < abs(dtheta) - 1e-15:
        # never step across a multiple of ``step``, so the grid angles are visited
        grid = (math.floor(abs(done) / step + 1e-9) + 1) * step
        h = min(h, abs(dtheta) - abs(done), grid - abs(done))
        # the ray equation fixes the angle only modulo 3^-(k+1)
        k, _ = _critical_value_escape(CubicMap(a, v))
        h = min(h, 0.25 / 3 ** (k + 1))
        th = theta0 + done + sign * h
        if prev is None:
            h = min(h, 1e-5)
        if prev is not None:
            t = h / prev[2]
            pred = (a + t * (a - prev[0]), v + t * (v - prev[1]))
            last = t * (abs(a - prev[0]) + abs(v - prev[1]))
            if last > 0.25 * gap(a, v):
                h *= 0.5
                if h < min_step:
                    raise NumericalError("level-curve walk stalled between nearby sheets")
                continue
        else:
            pred, last = (a, v), 1e-5 * (1 + abs(a))
        sol = solve_phi_u(p, pred[0], pred[1], th, level, cfg)
        if sol is None or not _accept(sol, pred, last):
            h *= 0.5
            if h < min_step:
                raise NumericalError("level-curve walk stalled (level too close to the connectedness locus?)")
            continue
        prev = (a, v, h)
        a, v = sol
        done += sign * h
        lp = complex(level, TWO_PI * th)
        out.append(EscapeSample(CubicMap(a, v, p), None, th % 1.0, level, lp))
        h = min(2 * h, step)
    return out


# --- escape regions ----------------------------------------------------------------


@dataclass
class EscapeRegionRecord:
    id: int
    kneading: str
    samples: list[EscapeSample]
    multiplicity_estimate: int
    # fiber indices over a = seed_radius whose parameter rays enter this region
    seed_indices: list[int] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return all(smp.kneading == self.kneading for smp in self.samples)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kneading": self.kneading,
            "multiplicity_estimate": self.multiplicity_estimate,
            "consistent": self.consistent,
            "seed_indices": self.seed_indices,
            "samples": [smp.to_json() for smp in self.samples],
        }


@dataclass(frozen=True)
class RegionConfig:
    seed_radius: float = 1.5
    match_tol: float = 1e-6
    max_turns: int = 27


def _close(x: EscapeSample, y: EscapeSample, tol: float) -> bool:
    return abs(x.map.a - y.map.a) + abs(x.map.v - y.map.v) <= tol * (1 + abs(x.map.a))


def sample_escape_regions(p: int, level: float, resolution: int = 16,
                          cfg: RegionConfig = RegionConfig()) -> list[EscapeRegionRecord]:
    """Enumerate the escape regions of the period-p curve.

    Every region contains points with |a| large, so the fiber over
    ``a = seed_radius`` meets all of them.  Each fiber point is carried down
    its parameter ray to ``G(-a) = level``, then moved along the level curve
    to cocritical angle 0.  A point that is not already a checkpoint of a
    known region starts a new one: the level curve is walked in whole turns
    of the angle until it closes, the number of turns being the multiplicity
    estimate.  ``resolution`` samples per turn are kept and carry their own
    kneading words.

    Raises
    ------
    ConfigurationError
        If the level is too small for the walks to stay in the escape locus.
    """
    if p not in (2, 3, 4):
        raise DomainError("escape regions are enumerated for p in {2, 3, 4}")
    if level <= 0 or resolution < 1:
        raise DomainError("level and resolution must be positive")
    step = 1.0 / resolution
    radius = cfg.seed_radius
    while True:
        roots = curve.fiber(radius, p).roots
        seeds = [escape_sample(CubicMap(radius, v, p), with_kneading=False) for v in roots]
        if min(smp.green_minus_a for smp in seeds) > 1.05 * level:
            break
        radius *= 2
    records: list[EscapeRegionRecord] = []
    anchors: list[list[EscapeSample]] = []
    for i, seed in enumerate(seeds):
        try:
            trace = trace_parameter_ray(p, seed, seed.theta, level)
            if not trace.complete:
                raise NumericalError("parameter ray stalled above the requested level")
            f, _ = trace.samples[-1]
            start = escape_sample(f, with_kneading=False, ref=complex(level, TWO_PI * seed.theta))
            start = walk_angle(p, start, (-start.theta) % 1.0, step)[-1]
        except NumericalError as exc:
            raise ConfigurationError(f"level {level} too small: {exc}") from exc
        hit = next((r for r, ck in enumerate(anchors) if any(_close(start, c, cfg.match_tol) for c in ck)), None)
        if hit is not None:
            records[hit].seed_indices.append(i)
            continue
        checkpoints = [start]
        kept: list[EscapeSample] = []
        cur = start
        for _ in range(cfg.max_turns):
            try:
                walk = walk_angle(p, cur, 1.0, step)
            except NumericalError as exc:
                raise ConfigurationError(f"level {level} too small: {exc}") from exc
            kept.extend(_every(walk, step))
            cur = walk[-1]
            if _close(cur, start, cfg.match_tol):
                break
            checkpoints.append(cur)
        else:
            raise NumericalError("level curve did not close")
        kept = [escape_sample(smp.map, ref=smp.log_phi) for smp in kept]
        words = [smp.kneading for smp in kept]
        word = max(set(words), key=lambda w: (words.count(w), w))
        records.append(EscapeRegionRecord(len(records), word, kept, len(checkpoints), [i]))
        anchors.append(checkpoints)
    return records


def _every(walk: list[EscapeSample], step: float) -> list[EscapeSample]:
    """The walk samples at multiples of ``step`` turns, excluding the endpoint."""
    t0 = walk[0].log_phi.imag / TWO_PI
    out = []
    for smp in walk[:-1]:
        t = smp.log_phi.imag / TWO_PI - t0
        if abs(t / step - round(t / step)) < 1e-9:
            out.append(smp)
    return out


# --- landing ---------------------------------------------------------------------


def periodic_points(f: CubicMap, m: int) -> np.ndarray:
    """Roots of f^m(z) - z (all points of period dividing m)."""
    base = np.poly1d([1.0, 0.0, -3 * f.a * f.a, 2 * f.a**3 + f.v])
    poly = np.poly1d([1.0, 0.0])
    for _ in range(m):
        poly = base(poly)
    roots = (poly - np.poly1d([1.0, 0.0])).roots
    # Newton polish on f^m(z) - z directly
    out = []
    for z in roots:
        for _ in range(6):
            w, d = z, 1.0 + 0j
            for _ in range(m):
                d *= f.deriv(w)
                w = f(w)
            if d == 1:
                break
            z = z - (w - z) / (d - 1)
        out.append(z)
    return np.array(out, dtype=complex)


def _root_of_unity_distance(lam: complex, max_order: int) -> float:
    best = abs(lam - 1)
    for q in range(2, max_order + 1):
        k = round(cmath.phase(lam) / TWO_PI * q)
        best = min(best, abs(lam - cmath.exp(TWO_PI * 1j * k / q)))
    return best


def cluster_multipliers(f: CubicMap, m: int, cluster_radius: float = 1e-3) -> list[tuple[complex, int]]:
    """Multipliers of f^m at its periodic points, averaged over clusters of
    nearly coincident points.

    Near a parabolic cycle of multiplier 1 two cycles collide and each
    multiplier moves like the square root of the parameter offset; their
    mean is analytic in the parameter, so it is the stable estimate of the
    multiplier of the limiting cycle.  Returns (multiplier, cluster size).
    """
    pts = periodic_points(f, m)
    mult = np.array([f.cycle_multiplier(z, m) for z in pts])
    used = np.zeros(len(pts), dtype=bool)
    out = []
    for i in range(len(pts)):
        if used[i]:
            continue
        members = np.flatnonzero(~used & (np.abs(pts - pts[i]) < cluster_radius * (1 + abs(pts[i]))))
        used[members] = True
        out.append((complex(mult[members].mean()), len(members)))
    return out


@dataclass(frozen=True)
class LandingEstimate:
    map: CubicMap
    kind: str  # "parabolic" or "pcf"
    metric: float
    consistent: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "a": [self.map.a.real, self.map.a.imag],
            "v": [self.map.v.real, self.map.v.imag],
            "kind": self.kind,
            "metric": self.metric,
            "consistent": self.consistent,
            "note": self.note,
        }


@dataclass(frozen=True)
class LandingConfig:
    samples: int = 8
    spacing: float = 1.3
    parab_tol: float = 1e-3
    pcf_tol: float = 1e-4
    max_root_order: int = 12
    max_preperiod: int = 6
    max_period: int = 4


def _tail_indices(levels: Sequence[float], n: int, spacing: float) -> list[int]:
    """n trace indices whose x = 1 / log(1/s) follow x_last * spacing^j."""
    xs = np.array([1.0 / math.log(1.0 / s) if 0 < s < 1 else math.inf for s in levels])
    idx = []
    for j in range(n):
        i = int(np.argmin(np.abs(xs - xs[-1] * spacing**j)))
        if i not in idx:
            idx.append(i)
    return sorted(idx)


PRIMITIVE_BASIS = (0, 2, 3, 4)
SATELLITE_BASIS = (0, 1, 2, 3)
# marker: powers of s itself, since a pcf landing converges like a power of s
PCF_BASIS = ("s", 0, 1, 2)


def extrapolate_landing(trace: ParameterRayTrace, cfg: LandingConfig = LandingConfig(),
                        powers: Sequence[int] = PRIMITIVE_BASIS) -> CubicMap:
    """Least-squares extrapolation of (a, v) to level 0.

    The abscissa is x = 1 / log(1/s) and the model is a polynomial in x with
    the given powers.  At a parabolic landing where a cycle of multiplier 1
    splits in two, a - a* starts at x^2 (PRIMITIVE_BASIS); where the cycle
    has a nontrivial root-of-unity multiplier it starts at x
    (SATELLITE_BASIS).  At a pcf landing the data are flat in x and either
    fit returns their common value.  The result is projected back onto the
    curve by choosing the nearest fiber root.  With PCF_BASIS the abscissa
    is s itself and only the last samples are used, since at a pcf landing
    the parameter converges like a power of s.
    """
    if len(trace.samples) < cfg.samples or trace.samples[-1][1] >= 1:
        raise DomainError("trace too short or not deep enough for a landing estimate")
    if powers == PCF_BASIS:
        idx = list(range(len(trace.samples) - cfg.samples, len(trace.samples)))
        x = np.array([trace.samples[i][1] for i in idx])
    else:
        idx = _tail_indices([s for _, s in trace.samples], cfg.samples, cfg.spacing)
        x = np.array([1.0 / math.log(1.0 / trace.samples[i][1]) for i in idx])
    basis = np.column_stack([x**k for k in powers if k != "s"])
    A = np.array([trace.samples[i][0].a for i in idx])
    V = np.array([trace.samples[i][0].v for i in idx])
    a0 = complex(np.linalg.lstsq(basis, A, rcond=None)[0][0])
    v_guess = complex(np.linalg.lstsq(basis, V, rcond=None)[0][0])
    p = trace.samples[-1][0].p
    roots = curve.fiber_roots(curve.phi_p(a0, p), check_exact=False).roots
    v0 = complex(roots[np.argmin(np.abs(roots - v_guess))])
    return CubicMap(a0, v0, p)


def preperiodic_distance(f: CubicMap, max_preperiod: int, max_period: int) -> tuple[float, int, int, complex]:
    """Smallest distance from f^j(-a), 1 <= j <= max_preperiod, to a repelling
    periodic point of period <= max_period; returns (distance, j, m, multiplier)."""
    best = (math.inf, 0, 0, 0j)
    orbit = f.orbit(-f.a, max_preperiod + 1)[1:]
    for m in range(1, max_period + 1):
        pts = periodic_points(f, m)
        for z in pts:
            lam = f.cycle_multiplier(z, m)
            if abs(lam) <= 1:
                continue
            for j, w in enumerate(orbit, start=1):
                d = abs(w - z)
                if d < best[0]:
                    best = (d, j, m, lam)
    return best


def landing_estimate(trace: ParameterRayTrace, theta: Optional[AngleLike] = None,
                     cfg: LandingConfig = LandingConfig()) -> LandingEstimate:
    """Extrapolated landing map with a parabolic/pcf diagnosis.

    If theta + 1/3 or theta - 1/3 is periodic under tripling (period q) the
    landing map should carry a cycle of period dividing q whose multiplier is
    a root of unity; otherwise the orbit of -a should fall onto a repelling
    cycle.  An inconsistent diagnosis is reported, not raised.
    """
    theta = to_angle(Fraction(theta).limit_denominator(10**6) if theta is not None
                     else Fraction(trace.theta).limit_denominator(10**6))
    sides = [classify_angle(theta + Fraction(1, 3)), classify_angle(theta - Fraction(1, 3))]
    periods = [c.period for c in sides if c.preperiod == 0]
    if periods:
        q = min(periods)
        # each model is judged by the multiplier it predicts: 1 for the
        # primitive fit, a nontrivial root of unity for the satellite fit
        best = None
        for powers, want_one in ((PRIMITIVE_BASIS, True), (SATELLITE_BASIS, False)):
            f0 = extrapolate_landing(trace, cfg, powers)
            metric = math.inf
            for m in range(1, q + 1):
                if q % m:
                    continue
                for lam, _size in cluster_multipliers(f0, m):
                    d_one = abs(lam - 1)
                    d_any = _root_of_unity_distance(lam, cfg.max_root_order)
                    if want_one:
                        metric = min(metric, d_one)
                    elif d_any < d_one:
                        metric = min(metric, d_any)
            label = "primitive" if want_one else "satellite"
            if best is None or metric < best[1]:
                best = (f0, metric, label)
        f0, metric, label = best
        ok = bool(metric <= cfg.parab_tol)
        note = f"{label} parabolic fit" + ("" if ok else "; no cycle with root-of-unity multiplier")
        return LandingEstimate(f0, "parabolic", metric, ok, note)
    f0 = extrapolate_landing(trace, cfg, PCF_BASIS)
    dist, j, m, _ = preperiodic_distance(f0, cfg.max_preperiod, cfg.max_period)
    ok = bool(dist <= cfg.pcf_tol)
    return LandingEstimate(f0, "pcf", float(dist), ok, f"f^{j}(-a) near a repelling cycle of period {m}")


# --- hyperbolic types -------------------------------------------------------------


HYP_TAGS = ("A", "B", "C", "D", "Escape", "Unknown")


@dataclass(frozen=True)
class HypType:
    tag: str
    k: Optional[int] = None
    confidence: float = 1.0

    def __post_init__(self):
        if self.tag not in HYP_TAGS:
            raise DomainError(f"unknown hyperbolic type {self.tag!r}")

    def to_json(self) -> dict:
        return {"tag": self.tag, "k": self.k, "confidence": self.confidence}


@dataclass(frozen=True)
class HypConfig:
    max_iter: int = 4000
    attract_tol: float = 1e-10
    max_cycle: int = 64
    grid: int = 201
    # extra periods of f^p applied to grid points beyond the orbit of -a
    extra_periods: int = 40


def _cycle_radius(pts: Sequence[complex]) -> float:
    """Half the smallest distance between marked cycle points."""
    if len(pts) < 2:
        return 0.5
    return 0.5 * min(abs(x - y) for i, x in enumerate(pts) for y in pts[i + 1:])


def basin_component(f: CubicMap, k: int, center: complex, half_width: float, n: int,
                    periods: int, delta: Optional[float] = None) -> tuple[np.ndarray, np.ndarray, float]:
    """Grid mask of the Fatou component of a_k within a square window.

    Pixels whose image under f^(periods * p) lies within ``delta`` of a_k are
    kept, and the connected piece containing a_k's pixel is returned together
    with the pixel centres and the pixel size.  The mask is empty when a_k
    falls outside the window.
    """
    pts = f.marked_cycle()
    ak = pts[k % f.p]
    delta = _cycle_radius(pts) if delta is None else delta
    xs = np.linspace(center.real - half_width, center.real + half_width, n)
    ys = np.linspace(center.imag - half_width, center.imag + half_width, n)
    grid = xs[None, :] + 1j * ys[:, None]
    z = grid.copy()
    alive = np.ones(z.shape, dtype=bool)
    bound = f.escape_radius
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(periods * f.p):
            z = np.where(alive, (z - f.a) ** 2 * (z + 2 * f.a) + f.v, z)
            alive &= np.abs(z) < bound
    inside = alive & (np.abs(z - ak) < delta)
    px = xs[1] - xs[0]
    j = int(round((ak.real - xs[0]) / px))
    i = int(round((ak.imag - ys[0]) / px))
    if not (0 <= i < n and 0 <= j < n) or not inside[i, j]:
        return np.zeros_like(inside), grid, px
    labels, _ = ndimage.label(inside)
    return labels == labels[i, j], grid, px


def _pixel(grid: np.ndarray, z: complex) -> tuple[int, int]:
    px = grid[0, 1].real - grid[0, 0].real
    return (int(round((z.imag - grid[0, 0].imag) / px)), int(round((z.real - grid[0, 0].real) / px)))


def _same_component(f: CubicMap, k: int, z: complex, n: int, periods: int) -> Optional[bool]:
    ak = f.marked_cycle()[k]
    center = 0.5 * (z + ak)
    half = 0.75 * abs(z - ak) + 1e-3
    mask, grid, _ = basin_component(f, k, center, half, n, periods)
    if not mask.any():
        return None
    i, j = _pixel(grid, z)
    return bool(mask[i, j])


def classify_hyperbolic(f: CubicMap, cfg: HypConfig = HypConfig()) -> HypType:
    """Hyperbolic type of f from the fate of the free critical point -a.

    A, B and C all mean -a is attracted to the marked cycle; the landing
    index k is the cycle point that f^(jp)(-a) converges to.  A/B (k = 0 or
    not) versus C is decided by whether -a and a_k lie in one connected piece
    of the sampled basin {z : |f^(Np)(z) - a_k| < delta}, delta being half
    the smallest distance between cycle points.  The test is repeated at
    twice the grid resolution; ``confidence`` is 1 when both agree and 0.5
    otherwise (the finer answer is kept).
    """
    p = f.p
    z = -f.a
    if green(f, z, cfg.max_iter).escaped:
        return HypType("Escape", None, 1.0)
    pts = f.marked_cycle()
    k = None
    for n in range(cfg.max_iter):
        if n % p == 0:
            d = [abs(z - w) for w in pts]
            j = int(np.argmin(d))
            if d[j] < cfg.attract_tol:
                k = j
                spent = n // p
                break
        z = f(z)
    if k is None:
        # attracting cycle elsewhere?
        for q in range(1, cfg.max_cycle + 1):
            w, dw = z, 1.0 + 0j
            for _ in range(q):
                dw *= f.deriv(w)
                w = f(w)
            if abs(w - z) < 1e-8 * (1 + abs(z)) and abs(dw) < 1:
                if min(abs(z - w0) for w0 in pts) > _cycle_radius(pts):
                    return HypType("D", None, 1.0)
        return HypType("Unknown", None, 0.0)
    tag_in = "A" if k == 0 else "B"
    if -f.a == pts[k]:
        return HypType(tag_in, k, 1.0)
    periods = spent + cfg.extra_periods
    coarse = _same_component(f, k, -f.a, cfg.grid, periods)
    fine = _same_component(f, k, -f.a, 2 * cfg.grid - 1, periods)
    if fine is None:
        return HypType("Unknown", k, 0.0)
    conf = 1.0 if coarse == fine else 0.5
    return HypType(tag_in if fine else "C", k, conf)


def phi_H(f: CubicMap, k: int) -> complex:
    """Internal Boettcher position of -a in the component of a_k.

    The local coordinate of f^p at a_k is carried out to -a along its
    internal ray.  Exactly 0 when -a = a_k.  The caller is responsible for
    the A/B precondition (see :func:`classify_hyperbolic`); a point not
    attracted to a_k raises DomainError.
    """
    pts = f.marked_cycle()
    if not 0 <= k < f.p:
        raise DomainError("k must satisfy 0 <= k < p")
    if -f.a == pts[k]:
        return 0j
    return local_boettcher_cycle(f, k, -f.a)


# --- ray connections ---------------------------------------------------------------


def return_times(word: str) -> list[int]:
    """Return time to D0 of each marked orbit point a_0, ..., a_(p-1)."""
    p = len(word)
    bits = word[-1] + word[:-1]  # bits[k] is the symbol of a_k
    out = []
    for k in range(p):
        j = 1
        while bits[(k + j) % p] != "0":
            j += 1
        out.append(j)
    return out


@dataclass(frozen=True)
class ScanConfig:
    level: float = 0.25
    ray_level: float = 1e-3
    g_floor: float = 1e-6
    periods: int = 60
    boundary_pixels: float = 3.0
    # the limit ray only has to get near its landing point, which is then
    # polished; with -a at ray_level the offsets that follow it are ~1e-10
    eps0: float = 1e-8
    min_eps: float = 1e-13
    agree: float = 1e-5


def _connection_angles(p: int) -> list[Fraction]:
    """Angles t with 3t of exact period p under tripling."""
    out = []
    n = 3**p - 1
    for i in range(n):
        base = Fraction(i, n)
        if classify_angle(base).period != p:
            continue
        for j in range(3):
            out.append((base + j) / 3)
    return sorted(out)


def ray_connection_scan(region: EscapeRegionRecord, grid: int = 161,
                        cfg: ScanConfig = ScanConfig()) -> list[tuple[Fraction, int, dict]]:
    """Exploratory search for ray connections between -a and a_k.

    For each parameter angle theta with theta +/- 1/3 among the angles whose
    triple has exact period p, a map is taken on the parameter ray of angle
    theta at level ``cfg.ray_level``.  There -a lies on the non-smooth rays
    at theta' = theta +/- 1/3; their left and right limit rays are traced
    and the landing points tested for lying on the boundary of the Fatou
    component V(a_k) (within ``cfg.boundary_pixels`` pixels of a ``grid``
    square flood fill).  Each hit is reported as (theta', k, evidence).  The
    evidence records whether a_k lies in D0 and has the maximal return time
    of the region's kneading word; ``witness`` is set when both hold and
    the region is not the distinguished one.
    """
    first = region.samples[0]
    p = first.map.p
    if p not in (2, 3):
        raise DomainError("ray connection scans are implemented for p in {2, 3}")
    word = region.kneading
    bits = word[-1] + word[:-1]
    rt = return_times(word)
    mu = max(rt)
    distinguished = word == "1" * (p - 1) + "0"
    found = []
    seen = set()
    for t in _connection_angles(p):
        for sign in (1, -1):
            theta = (t - Fraction(sign, 3)) % 1
            if theta in seen:
                continue
            seen.add(theta)
            try:
                f = _map_on_ray(region, theta, cfg)
            except (NumericalError, DomainError):
                continue
            for tp in ((theta + Fraction(1, 3)) % 1, (theta - Fraction(1, 3)) % 1):
                if classify_angle(3 * tp % 1).period != p:
                    continue
                for side in ("+", "-"):
                    try:
                        ray, eps = limit_ray(f, tp, side, cfg.g_floor, cfg.eps0, cfg.min_eps, cfg.agree)
                    except (NumericalError, DomainError):
                        continue
                    # the limit ray lands at a preperiodic point; Newton
                    # on f^(1+p)(z) = f(z) from the deepest ray point
                    e = _polish_landing(f, tp, ray.points)
                    if e is None:
                        continue
                    for k in range(p):
                        hit = _boundary_distance(f, k, e, grid, cfg.periods)
                        if hit is None or hit[0] > cfg.boundary_pixels * hit[1]:
                            continue
                        in_d0 = bits[k] == "0"
                        evidence = {
                            "parameter_angle": str(theta),
                            "side": side,
                            "landing": [e.real, e.imag],
                            "boundary_distance": hit[0],
                            "pixel": hit[1],
                            "a_k_in_D0": in_d0,
                            "return_time": rt[k],
                            "maximal_return_time": mu,
                            "witness": in_d0 and rt[k] == mu and not distinguished,
                        }
                        found.append((tp, k, evidence))
    return found


def region_ray_seed(region: EscapeRegionRecord, theta: AngleLike, branch: int = 0) -> EscapeSample:
    """A point of the region's level curve with cocritical angle ``theta``.

    A region of multiplicity m has m such points; ``branch`` picks one by
    walking ``branch`` extra turns from the region's first sample.
    """
    if not 0 <= branch < region.multiplicity_estimate:
        raise DomainError("branch must be below the region multiplicity")
    start = region.samples[0]
    p = start.map.p
    smp = walk_angle(p, start, (float(theta) - start.theta) % 1.0 + branch)[-1]
    return EscapeSample(smp.map, region.kneading, float(theta) % 1.0, smp.green_minus_a, smp.log_phi)


def _map_on_ray(region: EscapeRegionRecord, theta: Fraction, cfg: ScanConfig) -> CubicMap:
    smp = region_ray_seed(region, theta)
    if smp.green_minus_a <= cfg.ray_level:
        return smp.map
    trace = trace_parameter_ray(smp.map.p, smp, theta, cfg.ray_level)
    if not trace.complete:
        raise NumericalError("parameter ray stalled")
    return trace.samples[-1][0]


def _boundary_distance(f: CubicMap, k: int, z: complex, n: int, periods: int) -> Optional[tuple[float, float]]:
    """(distance from z to the sampled component of a_k, pixel size)."""
    ak = f.marked_cycle()[k]
    center = 0.5 * (z + ak)
    half = 0.6 * abs(z - ak) + 1e-3
    mask, grid, px = basin_component(f, k, center, half, n, periods)
    if not mask.any():
        return None
    return float(np.min(np.abs(grid[mask] - z))), px
