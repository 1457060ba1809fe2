"""
Angles under tripling
=====================

Exact rational angles, their orbits under t -> 3t, and the itineraries
of angles relative to the partition cut out by theta +/- 1/3.
"""

from fractions import Fraction

from periodic_cubics.angles import alpha_beta, classify, format_angle, itinerary, orbit

# %%
# Rational angles are preperiodic.  1/8 is periodic of period 2, while
# 1/24 lands on that cycle after one step.
for t in (Fraction(1, 8), Fraction(1, 24), Fraction(1, 26), Fraction(1, 3)):
    c = classify(t)
    path = " -> ".join(format_angle(x) for x in orbit(t, 4))
    print(f"{format_angle(t):>5}  preperiod {c.preperiod}, period {c.period}:  {path}")

# %%
# The interval endpoints alpha_l < beta_l below 1/3 shrink toward 1/3 as l grows.
for ell in range(2, 6):
    a, b = alpha_beta(ell)
    print(f"l={ell}: alpha={format_angle(a)}, beta={format_angle(b)}")

# %%
# For theta between beta_2 and 1/3 the angle theta + 1/3 spends its first
# two steps in the "1" half of the partition.
theta = Fraction(3, 10)
print(itinerary(theta, theta + Fraction(1, 3), "minus", 6))
print(itinerary(theta, theta - Fraction(1, 3), "plus", 6))
