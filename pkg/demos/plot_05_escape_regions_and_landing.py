"""
Escape regions and parameter rays
=================================

The ends of the curve are escape regions.  Each carries parameter rays,
and rays at rational angles land at parabolic or postcritically finite
maps.
"""

from fractions import Fraction

from periodic_cubics import paramspace

for r in paramspace.sample_escape_regions(3, 0.5, 8):
    print(f"region {r.id}: kneading {r.kneading}, multiplicity {r.multiplicity_estimate}")

# %%
# Trace two rays into the distinguished region of the period-2 curve.
region = next(r for r in paramspace.sample_escape_regions(2, 0.5, 8) if r.kneading == "10")
for theta in (Fraction(1, 24), Fraction(0)):
    seed = paramspace.region_ray_seed(region, theta)
    trace = paramspace.trace_parameter_ray(2, seed, theta, 1e-140)
    est = paramspace.landing_estimate(trace, theta)
    print(f"theta={theta}: {est.kind}, metric {est.metric:.2e}, a={est.map.a:.6f}  ({est.note})")
