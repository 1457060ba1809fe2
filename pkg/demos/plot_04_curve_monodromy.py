"""
The period-p curve and its monodromy
====================================

Over each a the curve has finitely many points v.  Carrying them around
the branch points of (a, v) -> a permutes them; a single orbit means the
curve is connected.
"""

from periodic_cubics import curve

for p in (2, 3):
    pts = curve.branch_points(p)
    res = curve.monodromy_transitive(p)
    print(f"p={p}: degree {res.fiber.degree}, {len(pts)} branch points, "
          f"orbits {res.orbit_count}, transitive={res.transitive}")

# %%
# The two sheets over the a-plane for p = 2 meet at a = +/- 2/3.
print(curve.branch_points(2))
for g in curve.monodromy_transitive(2).generators:
    print(g.cycles())
