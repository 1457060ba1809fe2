"""Desk-scale acceptance checks, grouped into suites for ``verify``.

Every check returns a :class:`CriterionResult` carrying the measured
quantities, so a failure can be diagnosed from the metrics alone.
"""

from __future__ import annotations

import cmath
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

import numpy as np

from . import curve, kneading, paramspace, render
from .angles import ONE_THIRD, alpha_beta, itinerary, negate_arc, rationals_in
from .dynamics import CubicMap, boettcher_external, green
from .rays import trace_ray


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} {mark}: {self.title} ({self.seconds:.1f} s)"

    def to_json(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "seconds": self.seconds, "metrics": self.metrics}


# --- 1: monodromy ---------------------------------------------------------------------------


def _monodromy_run(p: int, basepoint: complex, radius_scale: float) -> dict:
    res = curve.monodromy_transitive(p, basepoint=basepoint, radius_scale=radius_scale)
    return {"basepoint": [basepoint.real, basepoint.imag], "radius_scale": radius_scale,
            "degree": res.fiber.degree, "transitive": res.transitive,
            "orbit_count": res.orbit_count, "failed_loops": list(res.failed_loops)}


def check_monodromy(ps: Iterable[int] = (2, 3, 4)) -> tuple[bool, dict]:
    """Transitive monodromy with one orbit, repeated at half loop radii and
    at a second basepoint."""
    out, ok = {}, True
    for p in ps:
        runs = [_monodromy_run(p, 1.3 + 0.1j, 1.0),
                _monodromy_run(p, 1.3 + 0.1j, 0.5),
                _monodromy_run(p, -0.4 + 1.7j, 1.0)]
        want = curve.degree(p)
        ok &= all(r["transitive"] and r["orbit_count"] == 1 and r["degree"] == want for r in runs)
        out[f"p{p}"] = runs
    return ok, out


# --- 2: move lemma --------------------------------------------------------------------------


def check_move_lemma(ps: Iterable[int] = range(2, 13)) -> tuple[bool, dict]:
    out, ok = {}, True
    for p in ps:
        rep = kneading.verify_move_lemma(p)
        good = (rep.ok and rep.monotone and rep.max_chain + 1 <= p * p + p
                and rep.terminal_words == (kneading.distinguished(p),))
        ok &= good
        out[f"p{p}"] = {"words": rep.words, "edges": rep.edges, "max_chain": rep.max_chain,
                        "bound": rep.bound, "monotone": rep.monotone,
                        "terminal_words": list(rep.terminal_words), "ok": good}
    return ok, out


# --- 3: itinerary prefixes ------------------------------------------------------------------


def _prefix_failures(thetas, ell: int, want: str) -> list[str]:
    bad = []
    for th in thetas:
        for t, side in ((th + ONE_THIRD, "minus"), (th - ONE_THIRD, "plus")):
            if itinerary(th, t, side, ell + 1)[: len(want)] != want:
                bad.append(f"{th}:{side}")
    return bad


def check_itineraries(ells: Iterable[int] = range(2, 7), max_den: int = 3**7) -> tuple[bool, dict]:
    """Both itinerary prefixes over every rational of bounded denominator in
    the four intervals.  Negating theta swaps the plus and minus partitions,
    so the mirrored intervals are checked with the same two calls."""
    out, failures = {}, []
    for ell in ells:
        alpha, beta = alpha_beta(ell)
        upper = "0" + "1" * ell
        lower = "0" + "1" * (ell - 1) + "0"
        counts = {}
        for name, (lo, hi), want in (("beta_third", (beta, ONE_THIRD), upper),
                                     ("alpha_beta", (alpha, beta), lower)):
            for sign, arc in (("+", (lo, hi)), ("-", negate_arc(lo, hi))):
                thetas = rationals_in(arc[0], arc[1], max_den)
                bad = _prefix_failures(thetas, ell, want)
                counts[sign + name] = len(thetas)
                failures.extend(f"ell={ell} {x}" for x in bad)
        out[f"ell{ell}"] = counts
    out["failures"] = len(failures)
    out["first_failures"] = failures[:10]
    return not failures, out


# --- 4: z^3 oracle --------------------------------------------------------------------------


def check_cube_oracle(samples: int = 1000, seed: int = 0, tol: float = 1e-9) -> tuple[bool, dict]:
    """Closed forms for z^3 (G = log|z|, phi = z, radial rays) and G(f z) = 3 G(z)
    on random escaping points of random maps."""
    rng = np.random.default_rng(seed)
    cube = CubicMap(0, 0, 1)
    pts = [complex(r * math.cos(t), r * math.sin(t))
           for r, t in zip(rng.uniform(1.05, 50.0, 50), rng.uniform(0, 2 * math.pi, 50))]
    green_err = max(abs(green(cube, z).green - math.log(abs(z))) for z in pts)
    phi_err = max(abs(boettcher_external(cube, z) - z) / abs(z) for z in pts)
    ray_err = 0.0
    for t in (Fraction(0), Fraction(1, 7), Fraction(1, 3), Fraction(5, 8), Fraction(9, 10)):
        ray = trace_ray(cube, t, 1e-3)
        u = cmath.exp(2j * math.pi * float(t))
        for z, g in ray.points:
            ray_err = max(ray_err, abs(z - math.exp(g) * u))
    fe_err, n = 0.0, 0
    while n < samples:
        a, v = (complex(*rng.uniform(-2, 2, 2)) for _ in range(2))
        if abs(a) > 2 or abs(v) > 2:
            continue
        f = CubicMap(a, v)
        z = complex(*rng.uniform(-4, 4, 2))
        g0 = green(f, z)
        if not g0.escaped or g0.green < 1e-3:
            continue
        g1 = green(f, f(z))
        fe_err = max(fe_err, abs(g1.green - 3 * g0.green) / max(1.0, g1.green))
        n += 1
    m = {"green_error": green_err, "boettcher_rel_error": phi_err, "radial_ray_error": ray_err,
         "functional_equation_error": fe_err, "samples": n}
    return max(green_err, phi_err, ray_err, fe_err) <= tol, m


# --- 5: algebraic identities ----------------------------------------------------------------


def check_identities(samples: int = 10_000, seed: int = 0) -> tuple[bool, dict]:
    rng = np.random.default_rng(seed)
    a = rng.uniform(-2, 2, samples) + 1j * rng.uniform(-2, 2, samples)
    v = rng.uniform(-2, 2, samples) + 1j * rng.uniform(-2, 2, samples)
    f = CubicMap.__call__
    fa = np.array([f(CubicMap(x, y), x) for x, y in zip(a, v)])
    ident1 = float(np.max(np.abs(fa - v)))
    scale = 1 + np.abs(a) ** 3 + np.abs(v)
    diff = np.array([f(CubicMap(x, y), 2 * x) - f(CubicMap(x, y), -x) for x, y in zip(a, v)])
    ident2 = float(np.max(np.abs(diff) / scale))
    coeff_err = 0.0
    for x in a[:100]:
        got = curve.phi_p(x, 2).coeffs
        coeff_err = max(coeff_err, float(np.max(np.abs(np.asarray(got) - [1 - 2 * x * x, x, 1]))))
    pts = curve.branch_points(2)
    want = (2 / 3, -2 / 3)
    bp_err = max(min(abs(z - w) for z in pts) for w in want)
    m = {"f_of_a_error": ident1, "cocritical_error": ident2, "phi2_coeff_error": coeff_err,
         "branch_points": [[z.real, z.imag] for z in pts], "branch_point_error": bp_err}
    ok = ident1 <= 1e-12 and ident2 <= 1e-12 and coeff_err <= 1e-12 and bp_err <= 1e-8 and len(pts) == 2
    return ok, m


# --- 6: escape regions ----------------------------------------------------------------------


def _region_signature(regions) -> list[tuple[str, int]]:
    return sorted((r.kneading, r.multiplicity_estimate) for r in regions)


def check_escape_regions(p: int = 3, level: float = 0.5, resolution: int = 8) -> tuple[bool, dict]:
    runs = {}
    for lev, res in ((level, resolution), (level, 2 * resolution), (level / 2, resolution)):
        regions = paramspace.sample_escape_regions(p, lev, res)
        runs[f"level={lev},resolution={res}"] = regions
    base = next(iter(runs.values()))
    sigs = {k: _region_signature(v) for k, v in runs.items()}
    distinguished = kneading.distinguished(p)
    count = sum(r.kneading == distinguished for r in base)
    consistent = all(r.consistent for v in runs.values() for r in v)
    stable = len({tuple(s) for s in sigs.values()}) == 1
    m = {"regions": len(base), "distinguished_count": count, "all_consistent": consistent,
         "stable": stable, "signatures": {k: [list(x) for x in s] for k, s in sigs.items()},
         "ends": sum(r.multiplicity_estimate for r in base)}
    return count == 1 and consistent and stable, m


# --- 7: landing -----------------------------------------------------------------------------


def _landing(region, theta: Fraction, floor: float) -> paramspace.LandingEstimate:
    seed = paramspace.region_ray_seed(region, theta)
    trace = paramspace.trace_parameter_ray(region.samples[0].map.p, seed, theta, floor)
    return paramspace.landing_estimate(trace, theta)


def check_landing(floor: float = 1e-140) -> tuple[bool, dict]:
    """Parabolic landing at 1/24 and pcf landing at 0 for every p = 2 region,
    each stable when the level floor is halved."""
    regions = paramspace.sample_escape_regions(2, 0.5, 8)
    out, ok = {}, True
    for region in regions:
        for theta, kind in ((Fraction(1, 24), "parabolic"), (Fraction(0), "pcf")):
            est = _landing(region, theta, floor)
            half = _landing(region, theta, floor / 2)
            shift = abs(est.map.a - half.map.a) + abs(est.map.v - half.map.v)
            good = est.kind == kind and est.consistent and half.consistent
            ok &= good
            out[f"{region.kneading}@{theta}"] = {**est.to_json(), "halved_floor_metric": half.metric,
                                                  "halved_floor_shift": shift, "ok": good}
    return ok, out


# --- 8: rendering ---------------------------------------------------------------------------


def _png_bytes(cfg: render.RenderConfig, threads: int) -> tuple[bytes, render.RenderResult]:
    old = os.environ.get(render.THREADS_ENV)
    os.environ[render.THREADS_ENV] = str(threads)
    try:
        result = render.render(cfg)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "out.png")
            render.write_png(result, cfg, path)
            with open(path, "rb") as fh:
                return fh.read(), result
    finally:
        if old is None:
            os.environ.pop(render.THREADS_ENV, None)
        else:
            os.environ[render.THREADS_ENV] = old


def check_rendering(pixels: tuple[int, int] = (200, 150)) -> tuple[bool, dict]:
    cfg = render.RenderConfig(plane="parameter_a_slice", center=0j, width=3.0, pixels=pixels, p=2,
                              max_iter=200, mark_collisions=True)
    first, result = _png_bytes(cfg, 1)
    again, _ = _png_bytes(cfg, 1)
    threaded, _ = _png_bytes(cfg, 4)
    px = cfg.width / cfg.pixels[0]
    hits = [complex(*c) for c in result.metrics["collisions"]]
    # "within pixel resolution": the marked pixel centre is at most one pixel
    # width away (a containing pixel is within half a diagonal)
    reach = px
    stray = [z for z in hits if min(abs(z - 2 / 3), abs(z + 2 / 3)) > reach]
    both = all(any(abs(z - w) <= reach for z in hits) for w in (2 / 3, -2 / 3))
    dyn = render.RenderConfig(plane="dynamical", center=0j, width=4.0, pixels=(64, 64), p=1,
                              max_iter=100, seed_map=(0j, 0j))
    d1, _ = _png_bytes(dyn, 1)
    d3, _ = _png_bytes(dyn, 3)
    m = {"identical_runs": first == again, "identical_threads": first == threaded and d1 == d3,
         "collision_pixels": len(hits), "stray_collisions": len(stray), "both_branch_points": both,
         "pixel_size": px}
    return first == again and first == threaded and d1 == d3 and not stray and both, m


# --- suites ---------------------------------------------------------------------------------


CRITERIA: dict[int, tuple[str, Callable[[], tuple[bool, dict]]]] = {
    1: ("transitive monodromy for p = 2, 3, 4", check_monodromy),
    2: ("move lemma for 2 <= p <= 12", check_move_lemma),
    3: ("itinerary prefixes over bounded-denominator rationals", check_itineraries),
    4: ("z^3 closed forms and Green functional equation", check_cube_oracle),
    5: ("algebraic identities and p = 2 branch points", check_identities),
    6: ("p = 3 escape regions", check_escape_regions),
    7: ("p = 2 landing diagnostics", check_landing),
    8: ("rendering determinism and p = 2 collisions", check_rendering),
}

SUITES: dict[str, tuple[int, ...]] = {
    "combinatorics": (2, 3),
    "dynamics": (4, 5),
    "curve": (1, 8),
    "regions": (6, 7),
    "all": tuple(CRITERIA),
}


def run_criterion(number: int) -> CriterionResult:
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    passed, metrics = fn()
    return CriterionResult(number, title, bool(passed), metrics, time.perf_counter() - t0)


def run_suite(name: str, progress: Optional[Callable[[CriterionResult], None]] = None) -> list[CriterionResult]:
    if name not in SUITES:
        raise KeyError(name)
    out = []
    for n in SUITES[name]:
        res = run_criterion(n)
        if progress is not None:
            progress(res)
        out.append(res)
    return out
