"""Single-node dynamics as eps shrinks.

A node with v0 = 2 > mu = 1 and cell density exp(phi0/eps) sits dormant until
t = -phi0 / (v0 - mu), then consumes nutrient in a burst and drops onto the
lower root of v - ln v = 2 - ln 2.  Run with:  python3 demos/pointwise_limit.py
"""

import math

from nutrifront import ModelParams, branch_roots, integrate_point, limit_jump_time, q_of_v

phi0, v0 = -1.0, 2.0
tau = limit_jump_time(phi0, v0, 1.0)
print(f"limit jump time: {tau}")
print(f"{'eps':>8} {'crossing':>10} {'mass':>8} {'v(T)':>8}")
for eps in (0.1, 0.03, 0.01, 0.003, 0.001):
    tr = integrate_point(ModelParams(eps=eps), None, v0, t_end=3.0, rel_tol=1e-7, phi0=phi0)
    print(f"{eps:8.3g} {tr.crossing_time():10.4f} {tr.accumulated_mass():8.4f} {tr.v_values[-1]:8.4f}")

# mass consumed in the limit is ln(v0 / v_lower)
v_lower = branch_roots(q_of_v(v0, 1.0), 1.0).v_minus
print(f"limit: v_lower = {v_lower:.6f}, mass = {math.log(v0 / v_lower):.6f}")
