"""Cubic polynomials whose marked critical point is periodic.

The maps are f(z) = (z - a)^2 (z + 2a) + v with critical points a and -a;
the curve S_p collects those where a has exact period p.  Submodules:

angles
    Exact rational angles under tripling, partitions and itineraries.
kneading
    Kneading words and the move rewriting system.
dynamics
    Green function, Boettcher coordinates and internal coordinates.
rays
    External rays and the separation curve through the free critical point.
curve
    Exact equations for S_p, fibers over a, branch points and monodromy.
paramspace
    Escape regions, parameter rays, landing and hyperbolic types.
render
    Deterministic dynamical-plane and parameter-slice images.
"""

from . import angles, curve, dynamics, kneading, paramspace, rays, render
from .dynamics import (ConfigurationError, CubicMap, DomainError, GeometricAmbiguityError,
                       NumericalError, green, green_value)

__version__ = "0.1.0"

__all__ = [
    "angles", "curve", "dynamics", "kneading", "paramspace", "rays", "render",
    "CubicMap", "green", "green_value",
    "DomainError", "NumericalError", "ConfigurationError", "GeometricAmbiguityError",
]
