"""
Green function, Boettcher coordinate and external rays
======================================================

A map f(z) = (z - a)^2 (z + 2a) + v from the escape locus of the period-3
curve: the free critical point -a escapes, so two external rays run
into it and split the plane below its level into D0 and D1.
"""

from fractions import Fraction

from periodic_cubics import paramspace
from periodic_cubics.dynamics import green, cocritical_angle
from periodic_cubics.rays import fixed_and_prefixed, kneading_word, ray_landing, separation_curve

regions = paramspace.sample_escape_regions(3, 0.5, 8)
f = regions[0].samples[0].map
print(f)
print("G(-a) =", green(f, -f.a).green)
print("cocritical angle =", cocritical_angle(f))

# %%
# The two rays of angles theta +/- 1/3 meet at -a.
sep = separation_curve(f)
print("separation rays at", sep.left.angle, "and", sep.right.angle)

# %%
# The kneading word records on which side each point of the marked orbit lies.
print("kneading word:", kneading_word(f, sep))
z_fix, z1, z2 = fixed_and_prefixed(f, sep)
print("fixed point in D1:", z_fix)

# %%
# A periodic ray lands on a periodic point.
ray = ray_landing(f, Fraction(1, 8), 1e-6)
print("ray 1/8 lands at", ray.landing)
