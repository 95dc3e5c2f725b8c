"""
Ground state of the cubic NLS by normalised gradient flow
==========================================================

Minimise J(u) = int |u'|^2/2 - u^4/2 over ||u||^2 = 2 and compare with the
closed form U = sech x, mu = -1/2, J = -1/3. Then check how the profile
rescales to a semiclassical parameter h.
"""

import numpy as np

from solitonlab.field import Grid, integrate, l2_norm
from solitonlab.ground_state import minimize, rescale_to_physical, tail_check
from solitonlab.observables import internal_energy
from solitonlab.physics import ModelParams, Nonlinearity, validate_nonlinearity

cubic = Nonlinearity.focusing_power(c=2.0, p=4.0)
for line in validate_nonlinearity(cubic, dims=1).lines():
    print(line)

grid = Grid((1024,), (20.0,))
gs = minimize(cubic, grid, sigma=np.sqrt(2.0))
x = grid.axes[0]
print(f"\n{gs.iterations} flow steps")
print(f"||U - sech||  = {l2_norm(grid, gs.profile - 1 / np.cosh(x)):.2e}")
print(f"mu            = {gs.mu:.10f}   (exact -0.5)")
print(f"J             = {gs.energy:.10f}   (exact -1/3)")
print(f"EL residual   = {gs.residual:.2e}")

# The flow only ever lowers the energy.
print(f"energy history: {gs.energy_history[0]:.4f} -> {gs.energy_history[-1]:.6f}")

tail = tail_check(grid, gs.profile)
print(f"tail: {tail.detail}")

# U(x / h^beta) carries charge h^(3/2) sigma^2 and energy h^(1/2) J in 1D with alpha = 1.
phys = Grid((8192,), (8.0,))
print("\n   h    charge/sigma^2   h^1.5      J_h/J_1     h^0.5")
for h in (1.0, 0.5, 0.25, 0.125):
    params = ModelParams(h, 1.0, gs.sigma)
    u = rescale_to_physical(gs, params, phys)
    print(f"{h:6.3f}  {integrate(phys, u**2) / gs.sigma**2:12.8f}  {h**1.5:10.8f}"
          f"  {internal_energy(phys, u, params, cubic) / gs.energy:10.8f}  {h**0.5:8.6f}")
