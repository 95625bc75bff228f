"""
Finite-eps simulation of the full cell/nutrient system on a truncated line.

Two discretisations share one driver:

``hopf_cole``
    Unknowns phi = eps ln u and w = ln v.  Each step is split into a
    transport part, phi_t = eps phi_xx + |phi_x|^2 (backward Euler diffusion,
    explicit centered gradient), and a pointwise reaction part,
    phi_t = e^w - mu, w_t = -e^{phi/eps}, advanced by one classical RK4 step.
    Both unknowns stay O(1) while u ranges over hundreds of decades.

``direct``
    Unknowns u and v.  Exponential reaction factor for u, backward Euler
    diffusion with Neumann ends, then v <- v exp(-dt u).  Kept for
    cross-validation at moderate eps.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .core import Field, InitialData, ModelParams, d2

log = logging.getLogger(__name__)


class StiffnessFailure(RuntimeError):
    pass


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    dt_initial: float = 1e-2
    cfl_safety: float = 0.5
    variable_set: str = "hopf_cole"
    bc_phi: str = "linear_extrapolation"
    snapshot_times: tuple = ()

    def __post_init__(self):
        if not self.dt_initial > 0:
            raise ValueError("dt_initial must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.variable_set not in ("hopf_cole", "direct"):
            raise ValueError(f"unknown variable_set {self.variable_set!r}")
        if self.bc_phi not in ("neumann", "linear_extrapolation"):
            raise ValueError(f"unknown bc_phi {self.bc_phi!r}")
        ts = tuple(float(t) for t in self.snapshot_times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        object.__setattr__(self, "snapshot_times", ts)

    @classmethod
    def uniform_snapshots(cls, t_end: float, n: int = 50, **kw) -> "SchemeConfig":
        return cls(snapshot_times=tuple(np.linspace(0.0, t_end, n + 1)), **kw)


@dataclass
class SolutionRecord:
    """Snapshots (rows = snapshot times) plus a per-step diagnostic log."""

    grid: object
    eps: float
    mu: float
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    step_log: dict = field(default_factory=dict)
    scheme: SchemeConfig | None = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def snapshot(self, k: int) -> dict[str, Field]:
        return {name: Field(self.grid, getattr(self, name)[k])
                for name in ("u", "v", "w", "phi")}

    def save(self, path) -> None:
        np.savez(path, x=self.x, eps=self.eps, mu=self.mu, times=self.times,
                 u=self.u, v=self.v, w=self.w, phi=self.phi,
                 **{f"log_{k}": np.asarray(val) for k, val in self.step_log.items()})

    @classmethod
    def load(cls, path) -> "SolutionRecord":
        from .core import Grid1D
        with np.load(path) as z:
            x = z["x"]
            grid = Grid1D.uniform(float(x[0]), float(x[-1]), x.size)
            step_log = {k[4:]: z[k] for k in z.files if k.startswith("log_")}
            return cls(grid, float(z["eps"]), float(z["mu"]), z["times"],
                       z["u"], z["v"], z["w"], z["phi"], step_log)


def phi_floor(eps: float) -> float:
    return -500.0 * max(1.0, eps)


def _tridiag_solve(diag, lower, upper, rhs):
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs, overwrite_ab=True, check_finite=False)


def _diffusion_solve(values, coef, dx, boundary):
    """Backward Euler for f_t = coef f_xx.

    ``boundary`` is ``"neumann"`` (mirror ghost) or ``"linear_extrapolation"``
    (ghost on the line through the two edge nodes, so f_xx = 0 there).
    """
    n = values.size
    r = coef / dx**2
    diag = np.full(n, 1.0 + 2.0 * r)
    lower = np.full(n - 1, -r)
    upper = np.full(n - 1, -r)
    if boundary == "neumann":
        upper[0] = -2.0 * r
        lower[-1] = -2.0 * r
    else:
        diag[0] = diag[-1] = 1.0
        upper[0] = lower[-1] = 0.0
    return _tridiag_solve(diag, lower, upper, values)


def _grad(values, dx, boundary):
    g = np.empty_like(values)
    g[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    if boundary == "neumann":
        g[0] = g[-1] = 0.0
    else:
        g[0] = (values[1] - values[0]) / dx
        g[-1] = (values[-1] - values[-2]) / dx
    return g


def _reaction_rk4(phi, w, dt, eps, mu):
    def f(p, q):
        return np.exp(q) - mu, -np.exp(np.minimum(p / eps, 700.0))

    k1p, k1w = f(phi, w)
    k2p, k2w = f(phi + 0.5 * dt * k1p, w + 0.5 * dt * k1w)
    k3p, k3w = f(phi + 0.5 * dt * k2p, w + 0.5 * dt * k2w)
    k4p, k4w = f(phi + dt * k3p, w + dt * k3w)
    phi_new = phi + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    w_new = w + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    return phi_new, w_new


def invariant_field(eps, mu, u, v, dx):
    """eps u + v - mu ln v + eps^2 (ln v)_xx, node-wise."""
    lnv = np.log(v)
    return eps * u + v - mu * lnv + eps**2 * d2(lnv, dx)


def simulate(params: ModelParams, init: InitialData, scheme: SchemeConfig | None = None,
             t_end: float | None = None) -> SolutionRecord:
    """Evolve the full system from ``init`` up to ``t_end`` (default params.t_end)."""
    scheme = scheme or SchemeConfig()
    eps, mu = params.eps, params.mu
    grid = init.grid
    dx = grid.dx
    t_end = params.t_end if t_end is None else t_end
    if dx > eps:
        warnings.warn(f"dx = {dx:.3g} exceeds eps = {eps:.3g}; the front is under-resolved",
                      RuntimeWarning, stacklevel=2)
    snaps = [t for t in scheme.snapshot_times if t <= t_end + 1e-12]
    if not snaps or snaps[0] > 0.0:
        snaps = [0.0] + snaps
    if snaps[-1] < t_end - 1e-12:
        snaps.append(t_end)
    snaps = np.array(snaps)

    hc = scheme.variable_set == "hopf_cole"
    floor = phi_floor(eps)
    phi = np.maximum(init.phi0.values.copy(), floor)
    w = init.w0.values.copy()
    if hc:
        u = np.exp(phi / eps)
    else:
        u = np.maximum(np.exp(phi / eps), 1e-300)
    v = np.exp(w)
    inv0 = invariant_field(eps, mu, u, v, dx)

    out = {k: [] for k in ("u", "v", "w", "phi")}
    logs = {k: [] for k in ("t", "dt", "min_v", "max_u", "min_phi", "max_phi",
                            "min_w", "max_w", "drift")}

    def record():
        out["u"].append(u.copy())
        out["v"].append(v.copy())
        out["w"].append(w.copy())
        out["phi"].append(phi.copy())

    record()
    t = 0.0
    k_next = 1
    step = 0
    while k_next < snaps.size:
        target = snaps[k_next]
        u_max = float(np.exp(min(phi.max() / eps, 700.0))) if hc else float(u.max())
        rate = max(u_max * eps, float(np.max(np.abs(v - mu))), 1e-300)
        dt = min(scheme.dt_initial, scheme.cfl_safety * eps / rate)
        if hc:
            slope = float(np.max(np.abs(_grad(phi, dx, scheme.bc_phi))))
            if slope > 0:
                dt = min(dt, scheme.cfl_safety * dx / slope)
        if dt < 1e-14:
            raise StiffnessFailure(f"step size underflow (dt={dt:.3g}) at t={t:.6g}, step {step}")
        landing = target - t <= dt * (1 + 1e-9)
        if landing:
            dt = target - t

        if hc:
            g = _grad(phi, dx, scheme.bc_phi)
            phi = _diffusion_solve(phi + dt * g * g, dt * eps, dx, scheme.bc_phi)
            phi, w = _reaction_rk4(phi, w, dt, eps, mu)
            phi = np.maximum(phi, floor)
            u = np.exp(phi / eps)
            v = np.exp(w)
        else:
            u = u * np.exp(dt * (v - mu) / eps)
            u = _diffusion_solve(u, dt * eps, dx, "neumann")
            u = np.maximum(u, 1e-300)
            v = v * np.exp(-dt * u)
            w = np.log(v)
            phi = np.maximum(eps * np.log(u), floor)

        step += 1
        t = target if landing else t + dt
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(w)) and np.all(np.isfinite(u))):
            raise DivergenceError(f"non-finite field at step {step}, t={t:.6g}")
        drift = float(np.max(np.abs(invariant_field(eps, mu, u, v, dx) - inv0)[1:-1]))
        for key, val in (("t", t), ("dt", dt), ("min_v", v.min()), ("max_u", u.max()),
                         ("min_phi", phi.min()), ("max_phi", phi.max()),
                         ("min_w", w.min()), ("max_w", w.max()), ("drift", drift)):
            logs[key].append(float(val))
        if landing:
            record()
            k_next += 1
    log.debug("simulate: eps=%g, %d steps, %d snapshots", eps, step, snaps.size)
    return SolutionRecord(grid, eps, mu, snaps, *(np.array(out[k]) for k in ("u", "v", "w", "phi")),
                          step_log={k: np.array(val) for k, val in logs.items()}, scheme=scheme)


def invariant_drift(record: SolutionRecord, init: InitialData | None = None,
                    params: ModelParams | None = None) -> np.ndarray:
    """Per snapshot, max over interior nodes of the drift of
    eps u + v - mu ln v + eps^2 (ln v)_xx from its initial value."""
    eps, mu, dx = record.eps, record.mu, record.grid.dx
    if init is not None:
        u0 = np.exp(init.phi0.values / eps)
        base = invariant_field(eps, mu, u0, init.v0.values, dx)
    else:
        base = invariant_field(eps, mu, record.u[0], record.v[0], dx)
    out = np.empty(record.times.size)
    for k in range(record.times.size):
        cur = invariant_field(eps, mu, record.u[k], record.v[k], dx)
        out[k] = np.max(np.abs(cur - base)[1:-1])
    return out


def w_reformulation_residual(record: SolutionRecord, init: InitialData,
                             params: ModelParams | None = None) -> dict:
    """Discrete residual of the monostable form of the w-equation,

        eps w_t - eps^2 w_xx - Q~(w) + Q~(w0) + eps u0 + eps^2 w0_xx,

    with w_t from consecutive snapshots and the other terms averaged over
    each snapshot pair.  Returns per-interval max and L1 norms.
    """
    if record.times.size < 2:
        raise ValueError("need at least two snapshots for a time derivative")
    eps, mu, dx = record.eps, record.mu, record.grid.dx
    w0 = init.w0.values
    u0 = np.exp(init.phi0.values / eps)
    src = np.exp(w0) - mu * w0 + eps * u0 + eps**2 * d2(w0, dx)

    def spatial(wk):
        return -eps**2 * d2(wk, dx) - (np.exp(wk) - mu * wk)

    dts = np.diff(record.times)
    res = []
    for k in range(dts.size):
        wt = (record.w[k + 1] - record.w[k]) / dts[k]
        r = eps * wt + 0.5 * (spatial(record.w[k]) + spatial(record.w[k + 1])) + src
        res.append(r[1:-1])
    res = np.array(res)
    return {
        "t_mid": 0.5 * (record.times[1:] + record.times[:-1]),
        "max": np.max(np.abs(res), axis=1),
        "l1": np.sum(np.abs(res), axis=1) * dx,
        "residual": res,
    }
