"""Convergence of the PDE towards its eps -> 0 limit on the step datum.

Prints the convergence table (jump times, Lp distance of v to the limit
profile, weak mass error, Sobolev quotient) and a few a-priori estimates.
Run with:  python3 demos/eps_sweep.py
"""

from nutrifront.estimates import all_estimates, summary_text
from nutrifront.limits import SweepScenario, epsilon_sweep
from nutrifront.pde import simulate

sc = SweepScenario()
table = epsilon_sweep(sc, (0.1, 0.05, 0.025))
print(table.to_csv())

eps = 0.05
init = sc.initial_data(eps)
rec = simulate(sc.params(eps), init, sc.scheme())
print(summary_text(all_estimates(rec, init, R=sc.R)))
