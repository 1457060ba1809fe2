"""
Hyperbolic components
=====================

Where -a is attracted to the marked cycle, the position of -a relative to
the basin gives the component type, and the local Boettcher coordinate
of -a is a coordinate on the component.
"""

import numpy as np

from periodic_cubics import curve, paramspace
from periodic_cubics.dynamics import CubicMap

# %%
# Walk out from a = 0 along a ray in the a-plane and watch |phi_H| grow.
v = complex(curve.fiber(0.02, 2).roots[0])
for r in np.linspace(0.02, 0.5, 7):
    roots = curve.fiber(r, 2).roots
    v = complex(roots[np.argmin(abs(roots - v))])
    f = CubicMap(r, v, 2)
    t = paramspace.classify_hyperbolic(f)
    extra = f"|phi_H| = {abs(paramspace.phi_H(f, t.k)):.3f}" if t.tag in "ABC" else ""
    print(f"a={r:.2f}: type {t.tag} k={t.k} {extra}")
