"""Numerical laboratory for nonlinear Schroedinger solitons in the semiclassical regime.

Ground states by constrained minimisation, split-step propagation under a
confining potential, and the observables that test the barycenter's
Newtonian limit as h -> 0.
"""

__version__ = "0.1.0"

from .field import Grid  # noqa: E402
from .physics import ModelParams, Nonlinearity, Potential  # noqa: E402

__all__ = ["Grid", "ModelParams", "Nonlinearity", "Potential", "__version__"]
