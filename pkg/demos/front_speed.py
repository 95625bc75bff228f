"""Front propagation into a nutrient-rich region.

The step datum (v = 0.5 left, 2 right, phi0 = -|x|) develops a front that
travels at the minimal wave speed 2 sqrt(v+ - mu).  We compare the PDE front
with that speed and with the travelling-wave profile from the boundary-value
solver.  Run with:  python3 demos/front_speed.py
"""

import math

import numpy as np

from nutrifront import (ModelParams, SchemeConfig, dispersion_roots, empirical_front_speed,
                        minimal_speed, simulate, solve_profile_bvp)
from nutrifront.scenarios import grid_for, step_data
from nutrifront.waves import WaveSetup

sigma = minimal_speed(math.log(2.0), 1.0)
print(f"minimal speed: {sigma}")

for eps in (0.1, 0.05, 0.025):
    p = ModelParams(eps=eps, x_min=-20, x_max=20, n_cells=grid_for(eps, -20, 20), t_end=8.0)
    rec = simulate(p, step_data(p), SchemeConfig.uniform_snapshots(8.0, 80))
    fit = empirical_front_speed(rec, 1.0, (2.0, 8.0))
    print(f"eps={eps:<6} fitted speed {fit.speed:.4f}  (residual {fit.residual:.1e})")

setup = WaveSetup.from_v_plus(2.0, 1.0, 0.05)
prof = solve_profile_bvp(setup)
lam = dispersion_roots(setup.sigma, setup.w_plus, 1.0).roots[0].real
print(f"profile: {prof.y_nodes.size} nodes, residual {prof.residual_norm:.1e}, "
      f"monotone {prof.monotone}")
print(f"tail decay {prof.tail_decay_rate():.4f} vs double root {lam:.4f}")
v = prof.v_values
for y0 in (-0.5, -0.1, 0.0, 0.1, 0.5):
    j = int(np.argmin(np.abs(prof.y_nodes - y0)))
    print(f"  y={prof.y_nodes[j]:+.3f}  v={v[j]:.4f}")
