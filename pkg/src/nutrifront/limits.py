"""
Convergence of finite-eps runs toward the eps -> 0 limit.

Jump-time extraction, L^p distances to the two-branch limit profile, a
weak-* distance for u via cumulative time integrals, the fractional
difference-quotient norm of v and the crossing-measure exponent of v0.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .core import Field, InitialData, ModelParams
from .ode import LimitProfile, limit_profile
from .pde import SchemeConfig, SolutionRecord, simulate
from .scenarios import grid_for, make_preset


def extract_jump_times(record: SolutionRecord, mu: float | None = None) -> Field:
    """First time v drops to mu at each node, interpolated between snapshots.

    Nodes starting at or below mu never jump and get +inf.
    """
    mu = record.mu if mu is None else mu
    v, t = record.v, record.times
    tau = np.full(v.shape[1], math.inf)
    above0 = v[0] > mu
    below = v <= mu
    hit = below.any(axis=0) & above0
    j = np.argmax(below, axis=0)
    idx = np.nonzero(hit)[0]
    jj = j[idx]
    v_a, v_b = v[jj - 1, idx], v[jj, idx]
    t_a, t_b = t[jj - 1], t[jj]
    frac = np.where(v_a != v_b, (v_a - mu) / np.where(v_a != v_b, v_a - v_b, 1.0), 1.0)
    tau[idx] = t_a + frac * (t_b - t_a)
    return _inf_field(record.grid, tau)


def _inf_field(grid, values):
    # Field forbids non-finite values; jump times use +inf as a sentinel.
    f = object.__new__(Field)
    object.__setattr__(f, "grid", grid)
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    object.__setattr__(f, "values", arr)
    return f


def eikonal_step_jump_time(x, slope: float, v_plus: float, mu: float):
    """Jump time of the eps -> 0 limit for phi0 = -slope |x| ahead of a step.

    Hopf-Lax on the region where v = v_plus gives
    tau = slope x / (slope^2 + c) when c > slope^2, else x / (2 sqrt(c)),
    with c = v_plus - mu.  Defined for x > 0; +inf elsewhere.
    """
    x = np.asarray(x, dtype=float)
    c = v_plus - mu
    if c <= 0:
        return np.full_like(x, math.inf)
    if c > slope**2:
        tau = slope * x / (slope**2 + c)
    else:
        tau = x / (2.0 * math.sqrt(c))
    return np.where(x > 0, tau, math.inf)


def limit_v_profile(init: InitialData, mu: float | None, t: float, tau_ref=None) -> Field:
    """Two-branch limit of v at time t: v0_+ before the jump time, v0_- after.

    ``tau_ref`` is either None (no-diffusion formula), a LimitProfile, or an
    array of jump times (e.g. from a converged fine-eps run).
    """
    mu = init.mu if mu is None else mu
    prof = limit_profile(init, mu)
    if tau_ref is None:
        tau = prof.tau
    elif isinstance(tau_ref, LimitProfile):
        tau = tau_ref.tau
    else:
        tau = np.asarray(getattr(tau_ref, "values", tau_ref), dtype=float)
    # v is non-increasing in time: upper branch before the jump, lower after.
    v = np.where(t < tau, prof.v_upper.values, prof.v_lower.values)
    # Nodes with v0 < mu never jump and stay at their initial value.
    v = np.where(init.v0.values < mu, init.v0.values, v)
    return Field(init.grid, v)


def _region_mask(x, region):
    if region is None:
        return np.ones_like(x, dtype=bool)
    lo, hi = region
    return (x >= lo) & (x <= hi)


def lp_distance(field_a, field_b, p: float, region=None) -> float:
    """(int_region |a - b|^p dx)^(1/p), trapezoid rule."""
    a = getattr(field_a, "values", field_a)
    b = getattr(field_b, "values", field_b)
    grid = getattr(field_a, "grid", None) or getattr(field_b, "grid")
    x = grid.nodes
    m = _region_mask(x, region)
    return float(np.trapezoid(np.abs(np.asarray(a)[m] - np.asarray(b)[m]) ** p, x[m]) ** (1.0 / p))


def cumulative_u(record: SolutionRecord, method: str = "identity") -> np.ndarray:
    """int_0^t u(s, x) ds at every snapshot time.

    ``identity`` uses w(0) - w(t), exact because w_t = -u; ``trapezoid``
    integrates the snapshots and under-resolves spikes shorter than the
    snapshot spacing.
    """
    if method == "identity":
        return record.w[0][None, :] - record.w
    if method != "trapezoid":
        raise ValueError(f"unknown method {method!r}")
    dt = np.diff(record.times)[:, None]
    inc = 0.5 * (record.u[1:] + record.u[:-1]) * dt
    return np.vstack([np.zeros((1, record.u.shape[1])), np.cumsum(inc, axis=0)])


def weak_mass_error(record: SolutionRecord, profile: LimitProfile, region=None,
                    method: str = "identity") -> float:
    """sup_t of the L^1_x distance between int_0^t u ds and weight 1{t >= tau}."""
    x = record.x
    m = _region_mask(x, region)
    cum = cumulative_u(record, method)[:, m]
    tau = profile.tau[m]
    weight = np.where(np.isfinite(tau), profile.weight.values[m], 0.0)
    target = weight[None, :] * (record.times[:, None] >= tau[None, :])
    err = np.trapezoid(np.abs(cum - target), x[m], axis=1)
    return float(err.max())


def default_h_values(dx: float) -> list[float]:
    hs, h = [], 2.0 * dx
    while h <= 1.0 + 1e-12:
        hs.append(h)
        h *= 2.0
    return hs


def sobolev_quotient_norm(record: SolutionRecord, theta: float, h_values=None,
                          R: float = 5.0) -> float:
    """max_h int_0^T int_{|x|<=R} |v(x+h) - v(x)| / h^theta dx dt.

    Shifts are rounded to multiples of dx.
    """
    if not 0 <= theta <= 1.0 / 3.0 + 1e-15:
        raise ValueError("theta must lie in [0, 1/3]")
    dx = record.grid.dx
    h_values = default_h_values(dx) if h_values is None else list(h_values)
    x = record.x
    best = 0.0
    for h in h_values:
        if h < dx * (1 - 1e-9):
            raise ValueError(f"shift h={h:g} is below the grid spacing {dx:g}")
        s = int(round(h / dx))
        h_eff = s * dx
        xl = x[:-s]
        m = np.abs(xl) <= R
        diff = np.abs(record.v[:, s:] - record.v[:, :-s])[:, m]
        per_t = np.trapezoid(diff, xl[m], axis=1) / h_eff**theta
        best = max(best, float(np.trapezoid(per_t, record.times)))
    return best


@dataclass
class KappaFit:
    kappa: float
    status: str
    deltas: np.ndarray
    measures: np.ndarray


def crossing_measure_kappa(v0, mu: float, delta_values) -> KappaFit:
    """Fit |{x : |v0 - mu| <= delta}| ~ C delta^kappa on a log-log scale.

    ``kappa = inf`` when every set is empty, ``nan`` (undetermined) with fewer
    than three non-empty sets.
    """
    vals = np.asarray(getattr(v0, "values", v0), dtype=float)
    dx = v0.grid.dx
    deltas = np.asarray(delta_values, dtype=float)
    meas = np.array([np.count_nonzero(np.abs(vals - mu) <= d) * dx for d in deltas])
    ok = meas > 0
    if not ok.any():
        return KappaFit(math.inf, "empty", deltas, meas)
    if ok.sum() < 3:
        return KappaFit(math.nan, "undetermined", deltas, meas)
    slope = np.polyfit(np.log(deltas[ok]), np.log(meas[ok]), 1)[0]
    return KappaFit(float(slope), "fitted", deltas, meas)


def theta_admissible(theta: float, kappa: float) -> dict:
    """Report both sides of theta/(1-theta) <= 1/(1+2/kappa); not enforced."""
    lhs = theta / (1.0 - theta)
    rhs = 1.0 / (1.0 + 2.0 / kappa) if kappa > 0 else 0.0
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}


def lower_branch_set(init: InitialData, tol: float | None = None) -> np.ndarray:
    """Nodes where w0 sits on the lower branch (|v0 - v0_-| <= tol)."""
    tol = init.grid.dx if tol is None else tol
    return np.abs(init.v0.values - np.exp(init.w0_minus)) <= tol


# ---------------------------------------------------------------------------
# eps sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepScenario:
    name: str = "step"
    preset: str = "step"
    preset_args: tuple = (("v_left", 0.5), ("v_right", 2.0), ("slope", 1.0))
    mu: float = 1.0
    x_min: float = -10.0
    x_max: float = 10.0
    t_end: float = 3.0
    per_eps: float = 4.0
    n_snapshots: int = 60
    cfl_safety: float = 0.5
    dt_initial: float = 1e-2
    R: float = 5.0
    theta: float = 0.25
    t_probe: float = 1.3

    def params(self, eps: float) -> ModelParams:
        return ModelParams(eps=eps, mu=self.mu, x_min=self.x_min, x_max=self.x_max,
                           n_cells=grid_for(eps, self.x_min, self.x_max, self.per_eps),
                           t_end=self.t_end)

    def scheme(self) -> SchemeConfig:
        return SchemeConfig.uniform_snapshots(self.t_end, self.n_snapshots,
                                              dt_initial=self.dt_initial,
                                              cfl_safety=self.cfl_safety)

    def initial_data(self, eps: float) -> InitialData:
        return make_preset(self.preset, self.params(eps), **dict(self.preset_args))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def reference_tau(self, init: InitialData) -> np.ndarray:
        args = dict(self.preset_args)
        if self.preset in ("step", "wave"):
            v_plus = args.get("v_right", args.get("v_plus", 2.0))
            return eikonal_step_jump_time(init.grid.nodes, args.get("slope", 1.0), v_plus, self.mu)
        return limit_profile(init).tau


DEFAULT_SWEEP = (0.1, 0.05, 0.025, 0.0125)
ALL_ANALYSES = ("jump_time", "lp", "weak_mass", "sobolev")
TABLE_COLUMNS = ("eps", "jump_time_error", "l1_error", "l2_error", "weak_mass_error",
                 "sobolev_theta", "sobolev_value")


@dataclass
class ConvergenceTable:
    eps_values: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in sorted(self.provenance.items()):
            buf.write(f"# {k}={v}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(TABLE_COLUMNS)
        for r in self.rows:
            wr.writerow([f"{r[c]:.17g}" for c in TABLE_COLUMNS])
        return buf.getvalue()


def sweep_row(scenario: SweepScenario, eps: float, analyses=ALL_ANALYSES,
              record: SolutionRecord | None = None) -> dict:
    params = scenario.params(eps)
    init = scenario.initial_data(eps)
    if record is None:
        record = simulate(params, init, scenario.scheme())
    x = record.x
    region = (-scenario.R, scenario.R)
    m = np.abs(x) <= scenario.R
    tau_ref = scenario.reference_tau(init)
    row = {c: math.nan for c in TABLE_COLUMNS}
    row["eps"] = eps
    if "jump_time" in analyses:
        tau = extract_jump_times(record).values
        sel = m & np.isfinite(tau_ref) & (tau_ref < scenario.t_end)
        if sel.any():
            diff = np.abs(np.where(np.isfinite(tau[sel]), tau[sel], scenario.t_end) - tau_ref[sel])
            row["jump_time_error"] = float(diff.max())
    if "lp" in analyses:
        k = int(np.argmin(np.abs(record.times - scenario.t_probe)))
        ref = limit_v_profile(init, scenario.mu, record.times[k], tau_ref)
        cur = Field(record.grid, record.v[k])
        row["l1_error"] = lp_distance(cur, ref, 1, region)
        row["l2_error"] = lp_distance(cur, ref, 2, region)
    if "weak_mass" in analyses:
        prof = replace(limit_profile(init), tau=tau_ref)
        row["weak_mass_error"] = weak_mass_error(record, prof, region)
    if "sobolev" in analyses:
        row["sobolev_theta"] = scenario.theta
        row["sobolev_value"] = sobolev_quotient_norm(record, scenario.theta, R=scenario.R)
    return row


def epsilon_sweep(scenario: SweepScenario, eps_list, analyses=ALL_ANALYSES,
                  workers: int = 1) -> ConvergenceTable:
    """One simulation per eps; rows ordered by decreasing eps."""
    eps_sorted = sorted({float(e) for e in eps_list}, reverse=True)
    if workers > 1 and len(eps_sorted) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_row, [scenario] * len(eps_sorted), eps_sorted,
                                 [tuple(analyses)] * len(eps_sorted)))
    else:
        rows = [sweep_row(scenario, e, analyses) for e in eps_sorted]
    prov = {"scenario": scenario.name, "scenario_hash": scenario.digest(),
            "scheme": f"hopf_cole cfl={scenario.cfl_safety} dt0={scenario.dt_initial} "
                      f"dx=eps/{scenario.per_eps:g} snapshots={scenario.n_snapshots}"}
    return ConvergenceTable(eps_sorted, rows, prov)
