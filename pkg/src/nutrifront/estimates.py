"""
A-priori bounds evaluated on a simulated record.

Every function is pure post-processing of a :class:`SolutionRecord`; suprema
over continuous time are taken over snapshots.  Each report carries the
measured value and a "fitted constant", the value divided by the eps-power in
which the bound is stated, so that sweeps over eps can test uniformity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InitialData, ModelParams, phi_potential_closed, qtilde_of_w
from .pde import SolutionRecord

DEFAULT_CEILINGS = {
    "w_upper_margin": 1e-8,
    "w_lower_sqrt_eps": 10.0,
    "negative_branch_l1": 10.0,
    "time_integral_u": 10.0,
    "mass_bound": 10.0,
    "phi_dt_max": 10.0,
    "phi_lipschitz": 10.0,
    "phi_ceiling": 10.0,
    "phi_linear_lower": 10.0,
    "eps_dx_w": 100.0,
    "bv_phi": 100.0,
}


@dataclass
class EstimateReport:
    name: str
    value: float
    bound_form: str
    fitted_constant: float
    passed: bool
    eps: float = math.nan
    details: dict = field(default_factory=dict)


def _report(name, value, bound_form, fitted, eps, ceiling=None, **details):
    ceiling = DEFAULT_CEILINGS[name] if ceiling is None else ceiling
    return EstimateReport(name, float(value), bound_form, float(fitted),
                          bool(fitted <= ceiling), eps, details)


def _window(record, R):
    return np.abs(record.x) <= R


def check_w_bounds(record: SolutionRecord, init: InitialData) -> EstimateReport:
    """w stays below the upper branch, and above the lower one up to C sqrt(eps).

    The returned report is the sqrt(eps) statement; the upper-branch margin
    and the plain lower margin are in ``details``.
    """
    eps = record.eps
    upper_margin = float(np.max(record.w - init.w0_plus[None, :]))
    lower_margin = float(np.min(record.w - init.w0_minus[None, :]))
    fitted = max(0.0, -lower_margin) / math.sqrt(eps)
    rep = _report("w_lower_sqrt_eps", lower_margin, "w >= w0_minus - C sqrt(eps)",
                  fitted, eps, upper_margin=upper_margin,
                  upper_ok=upper_margin <= DEFAULT_CEILINGS["w_upper_margin"],
                  min_w=float(record.w.min()))
    rep.passed = rep.passed and rep.details["upper_ok"]
    return rep


def negative_branch_l1(record: SolutionRecord, init: InitialData, R: float) -> EstimateReport:
    eps, mu = record.eps, record.mu
    m = _window(record, R)
    q0 = qtilde_of_w(init.w0.values[m], mu)
    vals = []
    for wk in record.w:
        wm = wk[m]
        integrand = np.abs(qtilde_of_w(wm, mu) - q0) * (wm <= init.w0_minus[m])
        vals.append(np.trapezoid(integrand, record.x[m]))
    value = max(vals)
    return _report("negative_branch_l1", value, "C_R eps", value / eps, eps,
                   per_snapshot=np.array(vals))


def time_integral_u(record: SolutionRecord) -> EstimateReport:
    """sup_x of the time integral of u, checked against sup_x (w0 - w(T))."""
    integral = np.trapezoid(record.u, record.times, axis=0)
    value = float(integral.max())
    identity = float(np.max(record.w[0] - record.w[-1]))
    return _report("time_integral_u", value, "C(T)", value, record.eps,
                   identity_value=identity,
                   identity_rel_gap=abs(value - identity) / max(identity, 1e-300),
                   per_node=integral)


def mass_bound(record: SolutionRecord, params: ModelParams | None = None) -> EstimateReport:
    eps = record.eps
    series = eps * np.trapezoid(record.u, record.x, axis=1)
    value = float(series.max())
    slope, intercept = np.polyfit(record.times, series, 1)
    return _report("mass_bound", value, "C(t)", value, eps,
                   per_snapshot=series, growth_slope=float(slope),
                   growth_intercept=float(intercept))


def phi_bounds(record: SolutionRecord, params: ModelParams | None = None,
               p_values=(1, 2, 4)) -> dict[str, EstimateReport]:
    """Four bounds on phi: (a) time derivative from above, (b) Lipschitz in x,
    (c) the ceiling 2 eps ln(1/eps) + C eps, (d) linear lower growth."""
    eps, dx = record.eps, record.grid.dx
    x, t = record.x, record.times
    dt = np.diff(t)[:, None]
    phi_t = np.diff(record.phi, axis=0) / dt
    a = float(phi_t.max())
    lp = {p: float((np.sum(np.abs(phi_t) ** p * dt) * dx) ** (1.0 / p)) for p in p_values}

    phi_x = np.gradient(record.phi, dx, axis=1)
    b = float(np.max(np.abs(phi_x)))

    ceiling = 2.0 * eps * math.log(1.0 / eps)
    per_t = record.phi.max(axis=1) - ceiling
    c = float(per_t.max())

    lower = -record.phi / ((1.0 + t[:, None]) * (1.0 + np.abs(x)[None, :]))
    d = float(max(lower.max(), 0.0))
    c_of_t = np.max(-record.phi / (1.0 + np.abs(x)[None, :]), axis=1)
    slope, intercept = np.polyfit(t, c_of_t, 1)
    return {
        "a": _report("phi_dt_max", a, "d_t phi <= C", a, eps, lp_norms=lp),
        "b": _report("phi_lipschitz", b, "|d_x phi| <= C", b, eps),
        "c": _report("phi_ceiling", c, "max phi - 2 eps ln(1/eps) <= C eps", c / eps, eps,
                     per_snapshot=per_t, max_phi=float(record.phi.max())),
        "d": _report("phi_linear_lower", d, "phi >= -C (1+t)(1+|x|)", d, eps,
                     c_of_t=c_of_t, affine_fit=(float(intercept), float(slope))),
    }


def phi_composite(record: SolutionRecord, init: InitialData) -> np.ndarray:
    """Phi(x, w(t, x)) for every snapshot."""
    return np.array([phi_potential_closed(wk, init.w0.values, record.mu) for wk in record.w])


def compactness_bounds(record: SolutionRecord, init: InitialData, params: ModelParams | None = None,
                       R: float = 5.0) -> dict[str, EstimateReport]:
    eps, dx = record.eps, record.grid.dx
    a = float(np.max(np.abs(np.gradient(record.w, dx, axis=1)))) * eps
    m = _window(record, R)
    comp = phi_composite(record, init)[:, m]
    tv = np.sum(np.abs(np.diff(comp, axis=1)), axis=1)
    b = float(np.trapezoid(tv, record.times))
    return {
        "a": _report("eps_dx_w", a, "eps |d_x w| <= C_T", a, eps),
        "b": _report("bv_phi", b, "int int |d_x Phi(x, w)| <= C_TR", b, eps, per_snapshot=tv),
    }


def all_estimates(record: SolutionRecord, init: InitialData, R: float = 5.0) -> list[EstimateReport]:
    reports = [check_w_bounds(record, init), negative_branch_l1(record, init, R),
               time_integral_u(record), mass_bound(record)]
    reports += list(phi_bounds(record).values())
    reports += list(compactness_bounds(record, init, R=R).values())
    return reports


def fit_constant(eps_values, values, power: float) -> float:
    """Least-squares C in values ~ C eps^power."""
    e = np.asarray(eps_values, dtype=float) ** power
    v = np.asarray(values, dtype=float)
    return float(np.dot(e, v) / np.dot(e, e))


def uniformity_ratio(constants) -> float:
    """max/min of |C| across a sweep; inf on a sign change, 1 if all vanish."""
    c = np.asarray(constants, dtype=float)
    if np.all(c == 0):
        return 1.0
    if np.any(c == 0) or not (np.all(c > 0) or np.all(c < 0)):
        return math.inf
    a = np.abs(c)
    return float(a.max() / a.min())


def summary_text(reports: list[EstimateReport]) -> str:
    lines = []
    for r in reports:
        flag = "ok  " if r.passed else "FAIL"
        lines.append(f"{flag} {r.name:<20} eps={r.eps:<8.4g} value={r.value:<12.6g} "
                     f"C={r.fitted_constant:<12.6g} [{r.bound_form}]")
    return "\n".join(lines)
