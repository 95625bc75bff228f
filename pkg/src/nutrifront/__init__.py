"""Nutrient-limited bacterial fronts in the small-diffusion limit.

Solvers and diagnostics for  u_t - eps u_xx = u (v - mu)/eps,  v_t = -u v.
"""

from .core import (BranchPair, DomainError, Field, Grid1D, InitialData, ModelParams,
                   NoRootError, branch_roots, branch_roots_bisect, phi_potential,
                   phi_potential_closed, q_of_v, qtilde_of_w, qtilde_prime,
                   validate_initial_data)
from .ode import integrate_point, limit_jump_time, limit_profile
from .pde import SchemeConfig, SolutionRecord, invariant_drift, simulate
from .scenarios import make_preset
from .waves import (dispersion_roots, eikonal_wave_phi, empirical_front_speed,
                    minimal_speed, solve_profile_bvp)

__version__ = "0.1.0"
