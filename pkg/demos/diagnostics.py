"""
Energy split, Madelung variables and the two acceleration formulas
==================================================================

For a boosted soliton U(x - q0) exp(i v x / h) the dynamical energy is the
kinetic term v^2/2 times the charge plus the trap term, and the velocity
field of the Madelung picture is v wherever the density is not negligible.
The quantum potential of the bare ground state equals mu.
"""

import numpy as np

from solitonlab.field import Grid
from solitonlab.ground_state import minimize, rescale_to_physical
from solitonlab.observables import (barycenter_accel, barycenter_accel_by_parts, charge, energy_split, hydro,
                                    orbit_distance)
from solitonlab.physics import ModelParams, Nonlinearity, Potential, make_initial_data

cubic = Nonlinearity.focusing_power()
gs = minimize(cubic, Grid((1024,), (25.0,)), np.sqrt(2.0))
grid = Grid((4096,), (16.0,))
pot = Potential.quartic(0.1)

h, v = 0.25, 0.8
params = ModelParams(h, 1.0, gs.sigma)
psi = make_initial_data(params, gs, [1.0], [v], grid)

e = energy_split(grid, psi, params, cubic, pot)
print("E = {E:.8f}  J = {J:.8f}  G_kin = {G_kin:.8f}  G_pot = {G_pot:.8f}".format(**e))
print(f"v^2/2 * charge = {0.5 * v * v * charge(grid, psi):.8f}")
print(f"J / h^(1/2) = {e['J'] / h**0.5:.8f}  (J_1 = {gs.energy:.8f})")

a, b = barycenter_accel(grid, psi, pot)[0], barycenter_accel_by_parts(grid, psi, pot)[0]
print(f"qddot = {a:.12f} (weighted force)  {b:.12f} (by parts)")

hd = hydro(grid, psi, params, cubic)
m = hd["mask"]
print(f"velocity field on the mask: min {hd['vel'][0][m].min():.6f}, max {hd['vel'][0][m].max():.6f}")

params1 = ModelParams(1.0, 1.0, gs.sigma)
u = make_initial_data(params1, gs, [0.0], [0.0], grid)
Q = hydro(grid, u, params1, cubic)["Q"]
core = np.abs(grid.axes[0]) < 5
print(f"quantum potential of the ground state on |x| < 5: {Q[core].min():.6f} .. {Q[core].max():.6f}, mu = {gs.mu:.6f}")

profile = rescale_to_physical(gs, params, grid)
print(f"orbit distance of the boosted data: {orbit_distance(grid, psi, profile, params):.2e}")
