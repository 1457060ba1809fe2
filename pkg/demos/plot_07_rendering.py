"""
Pictures
========

A dynamical plane and a slice of the period-2 curve over the a-plane.
Escape is white, the basin of the marked cycle grey, other bounded
behaviour black; red pixels mark where two sheets meet.
"""

import os

from periodic_cubics import render

out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")
os.makedirs(out, exist_ok=True)

cfg = render.RenderConfig(plane="dynamical", width=3.0, pixels=(400, 400), p=2,
                          seed_map=(0.05 + 0j, -0.025 - 0.99718j))
meta = render.render_to_files(cfg, os.path.join(out, "dynamical.png"), os.path.join(out, "dynamical.json"))
print("dynamical plane:", meta["metrics"]["counts"])

# %%
cfg = render.RenderConfig(plane="parameter_a_slice", width=3.0, pixels=(400, 300), p=2)
meta = render.render_to_files(cfg, os.path.join(out, "slice_p2.png"), os.path.join(out, "slice_p2.json"))
print("collisions near:", meta["metrics"]["collisions"])
